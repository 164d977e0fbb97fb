#include "doctest.h"

#include <cmath>

#include "crashcause/util.hpp"

using namespace crashcause;

TEST_CASE("string helpers") {
    CHECK(trim("  a b \t\n") == "a b");
    CHECK(trim("") == "");
    CHECK(to_lower("AbC") == "abc");
    CHECK(normalize_whitespace("  a\t b\n\nc ") == "a b c");
    CHECK(iequals("Rear-End", "rear-end"));
    CHECK_FALSE(iequals("rear", "rear-end"));
}

TEST_CASE("percent rounding is round-half-up") {
    CHECK(percent_round(59, 226) == 26);
    CHECK(percent_round(25, 226) == 11);
    CHECK(percent_round(24, 226) == 11);
    CHECK(percent_round(15, 226) == 7);
    CHECK(percent_round(10, 226) == 4);
    CHECK(percent_round(83, 226) == 37);
    CHECK(percent_round(1, 2) == 50);
    CHECK(percent_round(1, 8) == 13);  // 12.5 rounds up
    CHECK(percent_round(0, 5) == 0);

    CHECK(percent_2dp(32, 36) == doctest::Approx(88.89));
    CHECK(percent_2dp(31, 36) == doctest::Approx(86.11));
    CHECK(percent_2dp(1, 1) == doctest::Approx(100.00));
    CHECK(percent_2dp(1, 3) == doctest::Approx(33.33));
}

TEST_CASE("rfc3339 parse and format") {
    const std::int64_t t = parse_rfc3339("2023-05-14T22:35:00-05:00");
    CHECK(t == parse_rfc3339("2023-05-15T03:35:00Z"));
    CHECK(format_rfc3339(t, -300) == "2023-05-14T22:35:00-05:00");
    CHECK(format_rfc3339(t, 0) == "2023-05-15T03:35:00Z");
    CHECK(parse_rfc3339("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_rfc3339("2023-01-01T00:00:30.500Z") == parse_rfc3339("2023-01-01T00:00:30Z"));
    CHECK_THROWS_AS(parse_rfc3339("2023-05-14 no"), ParseError);
    CHECK_THROWS_AS(parse_rfc3339("2023-13-14T22:35:00Z"), ParseError);
    CHECK_THROWS_AS(parse_rfc3339("2023-05-14T22:35:00"), ParseError);
}

TEST_CASE("binary writer and reader round-trip") {
    ByteWriter w;
    w.u8(7);
    w.u32(0xDEADBEEF);
    w.u64(1234567890123456789ULL);
    w.f64(-0.125);
    w.str("hello");
    ByteReader r{w.bytes.data(), w.bytes.size()};
    CHECK(r.u8() == 7);
    CHECK(r.u32() == 0xDEADBEEF);
    CHECK(r.u64() == 1234567890123456789ULL);
    CHECK(r.f64() == -0.125);
    CHECK(r.str() == "hello");
    CHECK(r.done());
    CHECK_THROWS_AS(r.u8(), ParseError);
}

TEST_CASE("rng is deterministic per seed") {
    Rng a(99), b(99), c(100);
    for (int i = 0; i < 16; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        CHECK(std::isfinite(x));
    }
    CHECK(a.uniform() == b.uniform());
    CHECK(a.uniform() != c.uniform());

    std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> v2 = v1;
    Rng s1(5), s2(5);
    s1.shuffle(v1);
    s2.shuffle(v2);
    CHECK(v1 == v2);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.0, 1.0, -0.1, 3.141592653589793, 1e-300, 2.5e17}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}
