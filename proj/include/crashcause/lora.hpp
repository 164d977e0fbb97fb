#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crashcause/corpus.hpp"
#include "crashcause/nf4.hpp"

namespace crashcause::lora {

// Dense row-major matrix; everything here is desk scale.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

struct AdapterConfig {
    std::size_t rank = 8;
    double alpha = 16.0;
    std::uint64_t init_seed = 42;
    double learning_rate = 0.5;
    std::size_t steps = 200;
    std::size_t eval_every = 10;
};

void validate_config(const AdapterConfig& cfg, std::size_t fan_in, std::size_t fan_out);

// Low-rank update dW = (alpha/rank) * b * a over a frozen fan_out x fan_in
// layer. b starts at zero so the adapted model equals the base at step 0.
struct LoraAdapter {
    Matrix a;  // rank x fan_in, seeded Gaussian std 0.02
    Matrix b;  // fan_out x rank, zeros
    AdapterConfig config;

    double scaling() const { return config.alpha / static_cast<double>(config.rank); }
    Matrix delta() const;  // (alpha/rank) * b * a, materialized
};

LoraAdapter init_adapter(const AdapterConfig& cfg, std::size_t fan_in, std::size_t fan_out);

struct Checkpoint;

// Mean-pooled embedding followed by a single dense projection to vocabulary
// logits; the projection is the LoRA-wrapped layer. The base can be stored
// NF4-quantized (forward then sees the dequantized grid values) or in full
// precision for gradient-check isolation.
class ToyModel {
public:
    static ToyModel build(std::vector<std::string> vocabulary, std::size_t embed_dim,
                          std::uint64_t seed,
                          const std::optional<nf4::QuantConfig>& quant = std::nullopt);

    std::size_t vocab_size() const { return tokens_.size(); }
    std::size_t dim() const { return embeddings_.cols; }
    const Matrix& embeddings() const { return embeddings_; }
    const Matrix& projection() const { return projection_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    bool quantized_base() const { return base_blob_.has_value(); }
    bool merged() const { return merged_; }

    std::size_t token_id(const std::string& token) const;  // throws on unknown token
    std::vector<std::size_t> encode(std::span<const std::string> words) const;
    std::vector<double> pool(std::span<const std::size_t> token_ids) const;

    // Byte-stable serialization of the frozen base (embeddings + projection);
    // identical before/after training by the frozen-base invariant.
    std::vector<std::uint8_t> serialize_base() const;

    friend ToyModel merge_adapter(const ToyModel& model, const LoraAdapter& adapter, bool force);
    friend Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes);

private:
    std::vector<std::string> tokens_;
    std::map<std::string, std::size_t> index_;
    Matrix embeddings_;
    Matrix projection_;  // dequantized view when the base is quantized
    std::optional<std::vector<std::uint8_t>> base_blob_;  // serialized NF4 tensor
    bool merged_ = false;
};

std::vector<double> adapted_forward(const ToyModel& model, const LoraAdapter& adapter,
                                    std::span<const std::size_t> context);
std::vector<double> base_forward(const ToyModel& model, std::span<const std::size_t> context);

// New model with the delta folded into the projection in full precision; the
// input model is untouched. Merging an already-merged model repeats the
// addition, so it is refused unless force is set.
ToyModel merge_adapter(const ToyModel& model, const LoraAdapter& adapter, bool force = false);

struct TrainingExample {
    std::vector<std::size_t> context;
    std::size_t target = 0;
};

// next-token decomposition: one example per completion token
std::vector<TrainingExample> pairs_to_examples(
    const ToyModel& model, std::span<const corpus::PromptCompletionPair> pairs);
std::vector<std::string> build_vocabulary(std::span<const corpus::PromptCompletionPair> pairs);

struct Gradients {
    Matrix a;
    Matrix b;
    double loss = 0.0;  // batch mean cross-entropy
};

Gradients compute_gradients(const ToyModel& model, const LoraAdapter& adapter,
                            std::span<const TrainingExample> batch);
double batch_loss(const ToyModel& model, const LoraAdapter& adapter,
                  std::span<const TrainingExample> batch);

// One gradient-descent update on a and b only; returns the batch mean loss
// measured before the update.
double train_step(const ToyModel& model, LoraAdapter& adapter,
                  std::span<const TrainingExample> batch, double learning_rate);

struct TrainingCurve {
    struct Point {
        std::size_t step = 0;
        double train_loss = 0.0;
        double eval_loss = 0.0;
    };
    std::vector<Point> points;

    std::string to_csv() const;  // step,train_loss,eval_loss
};

struct FinetuneResult {
    LoraAdapter adapter;
    TrainingCurve curve;
};

FinetuneResult finetune(const ToyModel& model,
                        std::span<const corpus::PromptCompletionPair> train_pairs,
                        std::span<const corpus::PromptCompletionPair> eval_pairs,
                        const AdapterConfig& cfg);

// checkpoint: header + base tensor (NF4 blob or dense f64) + adapter matrices
struct Checkpoint {
    ToyModel model;
    LoraAdapter adapter;
    std::uint64_t seed = 0;
};

std::vector<std::uint8_t> save_checkpoint(const ToyModel& model, const LoraAdapter& adapter,
                                          std::uint64_t seed);
Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes);

// The bundled 200-pair synthetic corpus: deterministic cartesian product of
// factor / outcome / setting phrases, regular enough for the toy trainer to
// learn from.
std::vector<corpus::PromptCompletionPair> toy_corpus(std::size_t count = 200);

}  // namespace crashcause::lora
