#include <cmath>
#include <vector>

#include "doctest.h"
#include "mvpf/nn.hpp"
#include "test_util.hpp"

using namespace mvpf;

namespace {
// Independent double-loop attention oracle: per-head softmax weights and
// weighted value sums, nothing shared with the library kernels.
std::vector<double> attention_oracle(const std::vector<double>& q, const std::vector<double>& k,
                                     const std::vector<double>& v, std::size_t m, std::size_t n,
                                     std::size_t d, std::size_t heads) {
    const std::size_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> out(m * d, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<double> logits(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dh; ++c) {
                    dot += q[i * d + h * dh + c] * k[j * d + h * dh + c];
                }
                logits[j] = dot * scale;
            }
            double mx = logits[0];
            for (double l : logits) mx = std::max(mx, l);
            double denom = 0.0;
            for (double& l : logits) {
                l = std::exp(l - mx);
                denom += l;
            }
            for (std::size_t j = 0; j < n; ++j) {
                const double w = logits[j] / denom;
                for (std::size_t c = 0; c < dh; ++c) {
                    out[i * d + h * dh + c] += w * v[j * d + h * dh + c];
                }
            }
        }
    }
    return out;
}
}  // namespace

TEST_CASE("attention: one token, one dim") {
    Tensor q = Tensor::constant({1, 1}, {1.0});
    CHECK(attention(q, q, q, 1).value() == 1.0);
}

TEST_CASE("attention: equal keys average the values") {
    Tensor q = Tensor::constant({1, 1}, {0.4});
    Tensor k = Tensor::constant({2, 1}, {0.9, 0.9});
    Tensor v = Tensor::constant({2, 1}, {0.0, 2.0});
    CHECK(attention(q, k, v, 1).value() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("attention matches the brute-force oracle") {
    Rng rng(7);
    for (const std::size_t heads : {std::size_t{1}, std::size_t{2}, std::size_t{4}}) {
        Tensor q = testutil::random_leaf({3, 4}, rng, false);
        Tensor k = testutil::random_leaf({5, 4}, rng, false);
        Tensor v = testutil::random_leaf({5, 4}, rng, false);
        const Tensor out = attention(q, k, v, heads);
        const auto want = attention_oracle(q.values(), k.values(), v.values(), 3, 5, 4, heads);
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(std::abs(out.values()[i] - want[i]) < 1e-12);
        }
    }
}

TEST_CASE("attention rows are convex combinations of value rows") {
    Rng rng(9);
    Tensor q = testutil::random_leaf({4, 6}, rng, false);
    Tensor k = testutil::random_leaf({7, 6}, rng, false);
    Tensor v = testutil::random_leaf({7, 6}, rng, false);
    const Tensor out = attention(q, k, v, 2);
    // per head-column, outputs stay within the value range
    for (std::size_t col = 0; col < 6; ++col) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t j = 0; j < 7; ++j) {
            lo = std::min(lo, v(j, col));
            hi = std::max(hi, v(j, col));
        }
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(out(i, col) >= lo - 1e-12);
            CHECK(out(i, col) <= hi + 1e-12);
        }
    }
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(3);
    Tensor a = testutil::random_leaf({6, 9}, rng, false);
    const Tensor s = softmax_rows(a);
    for (std::size_t i = 0; i < 6; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 9; ++j) acc += s(i, j);
        CHECK(std::abs(acc - 1.0) < 1e-12);
    }
}

TEST_CASE("attention shape contracts") {
    Tensor q = Tensor::zeros({2, 6});
    Tensor k = Tensor::zeros({3, 6});
    Tensor v = Tensor::zeros({4, 6});
    CHECK_THROWS_AS(attention(q, k, v, 2), DimensionError);  // k/v rows differ
    CHECK_THROWS_AS(attention(q, k, k, 4), DimensionError);  // 6 % 4 != 0
}

TEST_CASE("attention gradient matches finite differences") {
    Rng rng(17);
    Tensor q = testutil::random_leaf({3, 4}, rng);
    Tensor k = testutil::random_leaf({5, 4}, rng);
    Tensor v = testutil::random_leaf({5, 4}, rng);
    auto val = [&]() {
        GradGuard g(false);
        return mean(mul(attention(q, k, v, 2), attention(q, k, v, 2))).value();
    };
    mean(mul(attention(q, k, v, 2), attention(q, k, v, 2))).backward();
    CHECK(testutil::max_rel_err(q.grad(), testutil::finite_diff(q, val)) < 1e-6);
    CHECK(testutil::max_rel_err(k.grad(), testutil::finite_diff(k, val)) < 1e-6);
    CHECK(testutil::max_rel_err(v.grad(), testutil::finite_diff(v, val)) < 1e-6);
}

TEST_CASE("layer norm examples") {
    Tensor g1 = Tensor::constant({3}, {1.0, 1.0, 1.0});
    Tensor b1 = Tensor::constant({3}, {0.0, 0.0, 0.0});
    SUBCASE("constant row collapses to zero") {
        Tensor x = Tensor::constant({1, 3}, {1.0, 1.0, 1.0});
        const Tensor y = layer_norm(x, g1, b1, 1e-5);
        for (std::size_t i = 0; i < 3; ++i) CHECK(y.at(i) == 0.0);
    }
    SUBCASE("already standardized row") {
        Tensor g2 = Tensor::constant({2}, {1.0, 1.0});
        Tensor b2 = Tensor::constant({2}, {0.0, 0.0});
        Tensor x = Tensor::constant({1, 2}, {-1.0, 1.0});
        const Tensor y = layer_norm(x, g2, b2, 1e-5);
        CHECK(y.at(0) == doctest::Approx(-1.0).epsilon(1e-4));
        CHECK(y.at(1) == doctest::Approx(1.0).epsilon(1e-4));
    }
    SUBCASE("random row standardized") {
        Rng rng(3);
        Tensor x = testutil::random_leaf({1, 64}, rng, false);
        const Tensor y = layer_norm(x, Tensor::full({64}, 1.0), Tensor::zeros({64}), 1e-10);
        double mu = 0.0;
        for (std::size_t i = 0; i < 64; ++i) mu += y.at(i);
        mu /= 64.0;
        double var = 0.0;
        for (std::size_t i = 0; i < 64; ++i) var += (y.at(i) - mu) * (y.at(i) - mu);
        var /= 64.0;
        CHECK(std::abs(mu) < 1e-10);
        CHECK(std::abs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("patch embed token counts and unfold oracle") {
    Rng rng(21);
    SUBCASE("single token") {
        ParamStore store;
        PatchEmbed pe(store, "pe", 4, 1, 3, rng);
        const Tensor out = pe.forward(Tensor::zeros({1, 4, 4, 1}));
        CHECK(out.rows() == 1);
        CHECK(out.cols() == 3);
    }
    SUBCASE("zero input yields the bias row") {
        ParamStore store;
        PatchEmbed pe(store, "pe", 2, 3, 5, rng);
        // give the bias a nonzero value
        auto& bias = store.at("pe.b").tensor.mutable_values();
        for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = 0.5 + static_cast<double>(i);
        const Tensor out = pe.forward(Tensor::zeros({2, 4, 4, 3}));
        for (std::size_t r = 0; r < out.rows(); ++r) {
            for (std::size_t c = 0; c < out.cols(); ++c) CHECK(out(r, c) == bias[c]);
        }
    }
    SUBCASE("2x8x8x3 against the index-arithmetic oracle") {
        Tensor frames = testutil::random_leaf({2, 8, 8, 3}, rng, false);
        const Tensor tokens = patchify(frames, 4);
        CHECK(tokens.rows() == 8);  // 2 frames x 2 x 2 patches
        CHECK(tokens.cols() == 4 * 4 * 3);
        // independent unfold
        const auto& in = frames.values();
        auto src = [&](std::size_t f, std::size_t y, std::size_t x, std::size_t c) {
            return in[((f * 8 + y) * 8 + x) * 3 + c];
        };
        std::size_t t = 0;
        for (std::size_t f = 0; f < 2; ++f) {
            for (std::size_t py = 0; py < 2; ++py) {
                for (std::size_t px = 0; px < 2; ++px, ++t) {
                    std::size_t col = 0;
                    for (std::size_t dy = 0; dy < 4; ++dy) {
                        for (std::size_t dx = 0; dx < 4; ++dx) {
                            for (std::size_t c = 0; c < 3; ++c, ++col) {
                                CHECK(tokens(t, col) == src(f, py * 4 + dy, px * 4 + dx, c));
                            }
                        }
                    }
                }
            }
        }
    }
    SUBCASE("indivisible dims rejected") {
        CHECK_THROWS_AS(patchify(Tensor::zeros({1, 6, 8, 1}), 4), DimensionError);
    }
}

TEST_CASE("xavier init stays within the uniform limit") {
    Rng rng(5);
    const auto v = init_values(Init::kXavierUniform, 16, 9, 16 * 9, rng);
    const double limit = std::sqrt(6.0 / 25.0);
    for (double x : v) {
        CHECK(x <= limit);
        CHECK(x >= -limit);
    }
}

TEST_CASE("frozen params receive no gradient") {
    ParamStore store;
    Rng rng(2);
    Tensor w = store.create("w", {2, 2}, init_values(Init::kXavierUniform, 2, 2, 4, rng));
    Tensor x = Tensor::constant({1, 2}, {1.0, 2.0});
    store.at("w").set_trainable(false);
    sum(matmul(x, w)).backward();
    for (double g : store.at("w").tensor.grad()) CHECK(g == 0.0);
    store.at("w").set_trainable(true);
    sum(matmul(x, w)).backward();
    double total = 0.0;
    for (double g : store.at("w").tensor.grad()) total += std::abs(g);
    CHECK(total > 0.0);
}

TEST_CASE("param ids are unique") {
    ParamStore store;
    store.create("dup", {1}, {0.0});
    CHECK_THROWS_AS(store.create("dup", {1}, {0.0}), ContractError);
}
