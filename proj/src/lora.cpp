#include "crashcause/lora.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "crashcause/prompt.hpp"
#include "crashcause/util.hpp"

namespace crashcause::lora {

void validate_config(const AdapterConfig& cfg, std::size_t fan_in, std::size_t fan_out) {
    if (cfg.rank < 1) throw ValidationError("adapter rank must be >= 1");
    if (cfg.rank > std::min(fan_in, fan_out)) {
        throw ValidationError("adapter rank " + std::to_string(cfg.rank) +
                              " exceeds min(fan_in, fan_out) = " +
                              std::to_string(std::min(fan_in, fan_out)));
    }
    if (!(cfg.alpha > 0.0)) throw ValidationError("adapter alpha must be > 0");
    if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
    if (cfg.steps < 1) throw ValidationError("steps must be >= 1");
    if (cfg.eval_every < 1) throw ValidationError("eval_every must be >= 1");
}

Matrix LoraAdapter::delta() const {
    Matrix dw(b.rows, a.cols);
    const double s = scaling();
    for (std::size_t i = 0; i < b.rows; ++i) {
        for (std::size_t k = 0; k < b.cols; ++k) {
            const double bik = b.at(i, k);
            if (bik == 0.0) continue;
            for (std::size_t j = 0; j < a.cols; ++j) {
                dw.at(i, j) += s * bik * a.at(k, j);
            }
        }
    }
    return dw;
}

LoraAdapter init_adapter(const AdapterConfig& cfg, std::size_t fan_in, std::size_t fan_out) {
    validate_config(cfg, fan_in, fan_out);
    LoraAdapter ad;
    ad.config = cfg;
    ad.a = Matrix(cfg.rank, fan_in);
    ad.b = Matrix(fan_out, cfg.rank);  // zeros: adapted == base at init
    Rng rng(cfg.init_seed);
    for (double& v : ad.a.data) v = rng.normal(0.0, 0.02);
    return ad;
}

ToyModel ToyModel::build(std::vector<std::string> vocabulary, std::size_t embed_dim,
                         std::uint64_t seed, const std::optional<nf4::QuantConfig>& quant) {
    if (vocabulary.empty()) throw ValidationError("toy model needs a non-empty vocabulary");
    if (embed_dim < 1) throw ValidationError("embed_dim must be >= 1");
    ToyModel m;
    m.tokens_ = std::move(vocabulary);
    for (std::size_t i = 0; i < m.tokens_.size(); ++i) {
        if (!m.index_.emplace(m.tokens_[i], i).second) {
            throw ValidationError("duplicate vocabulary token '" + m.tokens_[i] + "'");
        }
    }
    const std::size_t v = m.tokens_.size();
    m.embeddings_ = Matrix(v, embed_dim);
    m.projection_ = Matrix(v, embed_dim);
    Rng rng(seed);
    // embeddings carry the signal; the projection starts near zero so the
    // initial predictive distribution is close to uniform
    for (double& x : m.embeddings_.data) x = rng.normal(0.0, 2.0);
    for (double& x : m.projection_.data) x = rng.normal(0.0, 0.02);
    if (quant) {
        const nf4::QuantizedTensor qt =
            nf4::quantize_tensor(m.projection_.data, v, embed_dim, *quant);
        m.base_blob_ = nf4::serialize_tensor(qt);
        m.projection_.data = nf4::dequantize_tensor(qt);
    }
    return m;
}

std::size_t ToyModel::token_id(const std::string& token) const {
    const auto it = index_.find(token);
    if (it == index_.end()) throw ValidationError("unknown token '" + token + "'");
    return it->second;
}

std::vector<std::size_t> ToyModel::encode(std::span<const std::string> words) const {
    std::vector<std::size_t> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(token_id(w));
    return ids;
}

std::vector<double> ToyModel::pool(std::span<const std::size_t> token_ids) const {
    if (token_ids.empty()) throw ValidationError("cannot pool an empty context");
    std::vector<double> pooled(dim(), 0.0);
    for (std::size_t id : token_ids) {
        if (id >= vocab_size()) throw ValidationError("token id out of range");
        for (std::size_t k = 0; k < dim(); ++k) pooled[k] += embeddings_.at(id, k);
    }
    const double inv = 1.0 / static_cast<double>(token_ids.size());
    for (double& x : pooled) x *= inv;
    return pooled;
}

std::vector<std::uint8_t> ToyModel::serialize_base() const {
    ByteWriter w;
    w.u64(vocab_size());
    w.u64(dim());
    for (const auto& t : tokens_) w.str(t);
    for (double x : embeddings_.data) w.f64(x);
    if (base_blob_) {
        w.u8(1);
        w.u64(base_blob_->size());
        w.raw(base_blob_->data(), base_blob_->size());
    } else {
        w.u8(0);
        for (double x : projection_.data) w.f64(x);
    }
    return std::move(w.bytes);
}

namespace {

// logits = (W + (alpha/r) B A) . pooled, computed as W.p + s*B*(A.p)
std::vector<double> forward_pooled(const ToyModel& model, const LoraAdapter* adapter,
                                   const std::vector<double>& pooled) {
    const Matrix& w = model.projection();
    const std::size_t v = model.vocab_size();
    const std::size_t d = model.dim();
    std::vector<double> logits(v, 0.0);
    for (std::size_t j = 0; j < v; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += w.at(j, k) * pooled[k];
        logits[j] = acc;
    }
    if (adapter != nullptr) {
        const std::size_t r = adapter->config.rank;
        std::vector<double> q(r, 0.0);  // A . p
        for (std::size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += adapter->a.at(i, k) * pooled[k];
            q[i] = acc;
        }
        const double s = adapter->scaling();
        for (std::size_t j = 0; j < v; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < r; ++i) acc += adapter->b.at(j, i) * q[i];
            logits[j] += s * acc;
        }
    }
    return logits;
}

// stable softmax in place; returns log(sum exp) shifted by max
void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& x : z) {
        x = std::exp(x - zmax);
        sum += x;
    }
    for (double& x : z) x /= sum;
}

void check_adapter_shapes(const ToyModel& model, const LoraAdapter& adapter) {
    if (adapter.a.cols != model.dim() || adapter.b.rows != model.vocab_size() ||
        adapter.a.rows != adapter.config.rank || adapter.b.cols != adapter.config.rank) {
        throw ValidationError("adapter dimensions do not match the wrapped layer");
    }
}

}  // namespace

std::vector<double> adapted_forward(const ToyModel& model, const LoraAdapter& adapter,
                                    std::span<const std::size_t> context) {
    check_adapter_shapes(model, adapter);
    return forward_pooled(model, &adapter, model.pool(context));
}

std::vector<double> base_forward(const ToyModel& model, std::span<const std::size_t> context) {
    return forward_pooled(model, nullptr, model.pool(context));
}

ToyModel merge_adapter(const ToyModel& model, const LoraAdapter& adapter, bool force) {
    check_adapter_shapes(model, adapter);
    if (model.merged_ && !force) {
        throw ValidationError("model already carries a merged adapter; merging again would "
                              "add the delta twice (pass force to do it anyway)");
    }
    ToyModel merged = model;
    const Matrix dw = adapter.delta();
    for (std::size_t i = 0; i < merged.projection_.data.size(); ++i) {
        merged.projection_.data[i] += dw.data[i];
    }
    // the merged projection is full precision again; the quantized blob no
    // longer describes it
    merged.base_blob_.reset();
    merged.merged_ = true;
    return merged;
}

std::vector<std::string> build_vocabulary(std::span<const corpus::PromptCompletionPair> pairs) {
    std::set<std::string> seen;
    for (const auto& p : pairs) {
        for (const auto& t : prompt::tokenize_text(p.prompt)) seen.insert(t);
        for (const auto& t : prompt::tokenize_text(p.completion)) seen.insert(t);
    }
    return {seen.begin(), seen.end()};
}

std::vector<TrainingExample> pairs_to_examples(
    const ToyModel& model, std::span<const corpus::PromptCompletionPair> pairs) {
    std::vector<TrainingExample> examples;
    for (const auto& p : pairs) {
        const auto ptoks = prompt::tokenize_text(p.prompt);
        const auto ctoks = prompt::tokenize_text(p.completion);
        if (ptoks.empty() || ctoks.empty()) {
            throw ValidationError("pair with empty prompt or completion tokens");
        }
        std::vector<std::size_t> context = model.encode(ptoks);
        for (const auto& t : ctoks) {
            const std::size_t target = model.token_id(t);
            examples.push_back({context, target});
            context.push_back(target);
        }
    }
    return examples;
}

Gradients compute_gradients(const ToyModel& model, const LoraAdapter& adapter,
                            std::span<const TrainingExample> batch) {
    check_adapter_shapes(model, adapter);
    if (batch.empty()) throw ValidationError("empty training batch");
    const std::size_t v = model.vocab_size();
    const std::size_t d = model.dim();
    const std::size_t r = adapter.config.rank;
    const double s = adapter.scaling();

    Gradients g;
    g.a = Matrix(r, d);
    g.b = Matrix(v, r);
    double loss_sum = 0.0;

    for (const auto& ex : batch) {
        if (ex.target >= v) throw ValidationError("target token id out of range");
        const std::vector<double> pooled = model.pool(ex.context);
        std::vector<double> probs = forward_pooled(model, &adapter, pooled);
        softmax_inplace(probs);
        const double p_target = probs[ex.target];
        loss_sum += -std::log(std::max(p_target, 1e-300));

        // dL/dlogits = softmax - onehot(target)
        probs[ex.target] -= 1.0;

        // q = A . p is needed for dB
        std::vector<double> q(r, 0.0);
        for (std::size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += adapter.a.at(i, k) * pooled[k];
            q[i] = acc;
        }
        // dB += s * g_logits (outer) q
        for (std::size_t j = 0; j < v; ++j) {
            const double gj = probs[j];
            if (gj == 0.0) continue;
            for (std::size_t i = 0; i < r; ++i) g.b.at(j, i) += s * gj * q[i];
        }
        // dA += s * (B^T g_logits) (outer) p
        for (std::size_t i = 0; i < r; ++i) {
            double bt_g = 0.0;
            for (std::size_t j = 0; j < v; ++j) bt_g += adapter.b.at(j, i) * probs[j];
            const double coeff = s * bt_g;
            if (coeff == 0.0) continue;
            for (std::size_t k = 0; k < d; ++k) g.a.at(i, k) += coeff * pooled[k];
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& x : g.a.data) x *= inv;
    for (double& x : g.b.data) x *= inv;
    g.loss = loss_sum * inv;
    if (!std::isfinite(g.loss)) {
        throw NumericError("non-finite training loss (" + std::to_string(g.loss) + ") over a " +
                           std::to_string(batch.size()) + "-example batch");
    }
    return g;
}

double batch_loss(const ToyModel& model, const LoraAdapter& adapter,
                  std::span<const TrainingExample> batch) {
    check_adapter_shapes(model, adapter);
    if (batch.empty()) throw ValidationError("empty batch");
    double loss_sum = 0.0;
    for (const auto& ex : batch) {
        std::vector<double> probs = forward_pooled(model, &adapter, model.pool(ex.context));
        softmax_inplace(probs);
        loss_sum += -std::log(std::max(probs[ex.target], 1e-300));
    }
    const double loss = loss_sum / static_cast<double>(batch.size());
    if (!std::isfinite(loss)) throw NumericError("non-finite evaluation loss");
    return loss;
}

double train_step(const ToyModel& model, LoraAdapter& adapter,
                  std::span<const TrainingExample> batch, double learning_rate) {
    const Gradients g = compute_gradients(model, adapter, batch);
    for (std::size_t i = 0; i < adapter.a.data.size(); ++i) {
        adapter.a.data[i] -= learning_rate * g.a.data[i];
    }
    for (std::size_t i = 0; i < adapter.b.data.size(); ++i) {
        adapter.b.data[i] -= learning_rate * g.b.data[i];
    }
    return g.loss;
}

std::string TrainingCurve::to_csv() const {
    std::string out = "step,train_loss,eval_loss\n";
    for (const auto& p : points) {
        out += std::to_string(p.step) + "," + format_double(p.train_loss) + "," +
               format_double(p.eval_loss) + "\n";
    }
    return out;
}

FinetuneResult finetune(const ToyModel& model,
                        std::span<const corpus::PromptCompletionPair> train_pairs,
                        std::span<const corpus::PromptCompletionPair> eval_pairs,
                        const AdapterConfig& cfg) {
    if (train_pairs.empty() || eval_pairs.empty()) {
        throw ValidationError("finetune: train and eval sets must be non-empty");
    }
    {
        std::set<std::pair<std::string, std::string>> train_keys;
        for (const auto& p : train_pairs) train_keys.emplace(p.prompt, p.completion);
        for (const auto& p : eval_pairs) {
            if (train_keys.count({p.prompt, p.completion})) {
                throw ValidationError("finetune: train and eval sets overlap");
            }
        }
    }
    validate_config(cfg, model.dim(), model.vocab_size());

    const std::vector<TrainingExample> train_examples = pairs_to_examples(model, train_pairs);
    const std::vector<TrainingExample> eval_examples = pairs_to_examples(model, eval_pairs);

    FinetuneResult out;
    out.adapter = init_adapter(cfg, model.dim(), model.vocab_size());
    out.curve.points.push_back({0, batch_loss(model, out.adapter, train_examples),
                                batch_loss(model, out.adapter, eval_examples)});
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        try {
            train_step(model, out.adapter, train_examples, cfg.learning_rate);
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(step) + ": " + e.what());
        }
        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            out.curve.points.push_back({step, batch_loss(model, out.adapter, train_examples),
                                        batch_loss(model, out.adapter, eval_examples)});
        }
    }
    return out;
}

std::vector<std::uint8_t> save_checkpoint(const ToyModel& model, const LoraAdapter& adapter,
                                          std::uint64_t seed) {
    ByteWriter w;
    w.u32(0x504B4343);  // "CCKP"
    w.u32(1);
    w.u64(model.vocab_size());
    w.u64(model.dim());
    w.u64(adapter.config.rank);
    w.f64(adapter.config.alpha);
    w.u64(seed);
    const std::vector<std::uint8_t> base = model.serialize_base();
    w.u64(base.size());
    w.raw(base.data(), base.size());
    for (double x : adapter.a.data) w.f64(x);
    for (double x : adapter.b.data) w.f64(x);
    return std::move(w.bytes);
}

Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader r{bytes.data(), bytes.size()};
    if (r.u32() != 0x504B4343) throw ParseError("checkpoint: bad magic");
    if (r.u32() != 1) throw ParseError("checkpoint: unsupported version");
    Checkpoint ck;
    const std::uint64_t vocab = r.u64();
    const std::uint64_t d = r.u64();
    const std::uint64_t rank = r.u64();
    const double alpha = r.f64();
    ck.seed = r.u64();

    std::vector<std::uint8_t> base(r.u64());
    r.raw(base.data(), base.size());
    ByteReader br{base.data(), base.size()};
    if (br.u64() != vocab || br.u64() != d) {
        throw ParseError("checkpoint: base tensor header mismatch");
    }
    ToyModel& m = ck.model;
    m.tokens_.reserve(vocab);
    for (std::uint64_t i = 0; i < vocab; ++i) m.tokens_.push_back(br.str());
    for (std::size_t i = 0; i < m.tokens_.size(); ++i) {
        if (!m.index_.emplace(m.tokens_[i], i).second) {
            throw ParseError("checkpoint: duplicate vocabulary token");
        }
    }
    m.embeddings_ = Matrix(vocab, d);
    for (double& x : m.embeddings_.data) x = br.f64();
    if (br.u8() == 1) {
        std::vector<std::uint8_t> blob(br.u64());
        br.raw(blob.data(), blob.size());
        const nf4::QuantizedTensor qt = nf4::deserialize_tensor(blob);
        if (qt.rows != vocab || qt.cols != d) {
            throw ParseError("checkpoint: quantized base shape mismatch");
        }
        m.projection_ = Matrix(vocab, d);
        m.projection_.data = nf4::dequantize_tensor(qt);
        m.base_blob_ = std::move(blob);
    } else {
        m.projection_ = Matrix(vocab, d);
        for (double& x : m.projection_.data) x = br.f64();
    }

    ck.adapter.config.rank = rank;
    ck.adapter.config.alpha = alpha;
    ck.adapter.config.init_seed = ck.seed;
    ck.adapter.a = Matrix(rank, d);
    for (double& x : ck.adapter.a.data) x = r.f64();
    ck.adapter.b = Matrix(vocab, rank);
    for (double& x : ck.adapter.b.data) x = r.f64();
    if (!r.done()) throw ParseError("checkpoint: trailing bytes");
    return ck;
}

std::vector<corpus::PromptCompletionPair> toy_corpus(std::size_t count) {
    static const std::vector<std::string> factors = {
        "speeding",       "heavy rain",      "traffic congestion", "driver fatigue",
        "distraction",    "alcohol use",     "darkness",           "dense fog",
        "sharp curves",   "wet pavement",
    };
    static const std::vector<std::string> outcomes = {
        "rear-end crashes", "severe injuries", "lane departures", "crash frequency",
        "sideswipe collisions",
    };
    static const std::vector<std::string> settings = {
        "at night", "during peak hours", "in work zones", "on long downgrades",
    };
    std::vector<corpus::PromptCompletionPair> pairs;
    pairs.reserve(factors.size() * outcomes.size() * settings.size());
    for (const auto& f : factors) {
        for (const auto& o : outcomes) {
            for (const auto& s : settings) {
                corpus::PromptCompletionPair p;
                p.prompt = "how does " + f + " affect " + o + " " + s + " on freeways";
                p.completion = f + " increases the risk of " + o + " " + s + " on freeways";
                p.source_study_id = "toy";
                pairs.push_back(std::move(p));
            }
        }
    }
    if (count > pairs.size()) {
        throw ValidationError("toy corpus supports at most " + std::to_string(pairs.size()) +
                              " pairs");
    }
    pairs.resize(count);
    return pairs;
}

}  // namespace crashcause::lora
