#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mix2/mixops.hpp"

using namespace mix2;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -3.0, double hi = 3.0) {
    Matrix m(r, c);
    for (double& v : m.storage()) v = rng.uniform(lo, hi);
    return m;
}

Matrix random_labels(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.storage()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
    return m;
}

}  // namespace

TEST_CASE("sample_beta is deterministic per seed and validates alpha") {
    Rng a(7), b(7);
    const double l1 = sample_beta(1.0, a).lambda;
    const double l2 = sample_beta(1.0, b).lambda;
    CHECK(l1 == l2);
    CHECK(l1 >= 0.0);
    CHECK(l1 <= 1.0);
    CHECK_THROWS_AS(sample_beta(0.0, a), ParameterError);
    CHECK_THROWS_AS(sample_beta(-1.0, a), ParameterError);
}

TEST_CASE("Beta(alpha, alpha) is symmetric around one half") {
    Rng rng(11);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_beta(0.2, rng).lambda;
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("Beta(1, 1) matches the uniform CDF (Kolmogorov-Smirnov)") {
    Rng rng(13);
    const std::size_t n = 100000;
    std::vector<double> draws(n);
    for (auto& d : draws) d = sample_beta(1.0, rng).lambda;
    std::sort(draws.begin(), draws.end());
    // Oracle: the analytic CDF of Beta(1,1) is F(x) = x.
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = draws[i];
        ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
        ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
    }
    CHECK(ks < 0.01);
}

TEST_CASE("sample_mix_matrix produces row-stochastic matrices") {
    Rng rng(5);
    SUBCASE("single component is degenerate at 1") {
        MixMatrix m = sample_mix_matrix(1, 1.0, rng);
        CHECK(m.size() == 1);
        CHECK(m(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("rows sum to one, entries nonnegative") {
        MixMatrix m = sample_mix_matrix(4, 1.0, rng);
        for (std::size_t i = 0; i < 4; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(m(i, j) >= 0.0);
                sum += m(i, j);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
    SUBCASE("empty batch rejected") {
        CHECK_THROWS_AS(sample_mix_matrix(0, 1.0, rng), ParameterError);
    }
}

TEST_CASE("Dirichlet(1,1,1) rows have mean 1/3 per component") {
    Rng rng(17);
    const int rows = 100000;
    double mean[3] = {0.0, 0.0, 0.0};
    // Draw many 3-row matrices rather than single rows; same marginal.
    for (int r = 0; r < rows / 3; ++r) {
        MixMatrix m = sample_mix_matrix(3, 1.0, rng);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) mean[j] += m(i, j);
    }
    const double total = 3.0 * (rows / 3);
    for (double& v : mean) v /= total;
    for (double v : mean) CHECK(std::abs(v - 1.0 / 3.0) < 0.005);
}

TEST_CASE("mixup_inputs computes the convex combination") {
    MultiLabelBatch batch;
    batch.features = Matrix::from_rows({{2.0, 4.0}, {10.0, 0.0}});
    batch.labels = Matrix::from_rows({{1.0}, {0.0}});
    PairingPlan swap{{1, 0}};

    SUBCASE("lambda = 1 is the identity") {
        Matrix out = mixup_inputs(batch, swap, MixCoefficient(1.0));
        CHECK(out == batch.features);
    }
    SUBCASE("midpoint") {
        MultiLabelBatch b2;
        b2.features = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
        b2.labels = Matrix::from_rows({{1.0}, {0.0}});
        Matrix out = mixup_inputs(b2, swap, MixCoefficient(0.5));
        CHECK(out(0, 0) == doctest::Approx(0.5));
        CHECK(out(0, 1) == doctest::Approx(0.5));
    }
    SUBCASE("lambda = 0.3") {
        Matrix out = mixup_inputs(batch, swap, MixCoefficient(0.3));
        CHECK(out(0, 0) == doctest::Approx(7.6).epsilon(1e-12));
        CHECK(out(0, 1) == doctest::Approx(1.2).epsilon(1e-12));
    }
    SUBCASE("permutation length mismatch") {
        PairingPlan bad{{0}};
        CHECK_THROWS_AS(mixup_inputs(batch, bad, MixCoefficient(0.5)), ShapeError);
    }
}

TEST_CASE("mix_embeddings boundary and midpoint behaviour") {
    Matrix h = Matrix::from_rows({{4.0, 0.0, 8.0}, {0.0, 4.0, 0.0}});
    PairingPlan swap{{1, 0}};
    SUBCASE("lambda = 0 picks the partner row") {
        Matrix out = mix_embeddings(h, swap, MixCoefficient(0.0));
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(out(0, k) == doctest::Approx(h(1, k)));
            CHECK(out(1, k) == doctest::Approx(h(0, k)));
        }
    }
    SUBCASE("lambda = 0.25 hand-computed") {
        Matrix out = mix_embeddings(h, swap, MixCoefficient(0.25));
        CHECK(out(0, 0) == doctest::Approx(1.0));
        CHECK(out(0, 1) == doctest::Approx(3.0));
        CHECK(out(0, 2) == doctest::Approx(2.0));
    }
    SUBCASE("midpoint equals hand-computed average") {
        Matrix out = mix_embeddings(h, swap, MixCoefficient(0.5));
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(out(0, k) == doctest::Approx(0.5 * (h(0, k) + h(1, k))));
    }
}

TEST_CASE("multimix identities") {
    Rng rng(23);
    Matrix h = random_matrix(5, 3, rng);
    SUBCASE("identity matrix is a bit-exact no-op") {
        MixMatrix eye(Matrix::identity(5));
        CHECK(multimix(h, eye) == h);
    }
    SUBCASE("uniform row yields the column-wise mean") {
        Matrix m = Matrix::identity(5);
        for (std::size_t j = 0; j < 5; ++j) m(0, j) = 0.2;
        m(0, 0) = 0.2;
        Matrix out = multimix(h, MixMatrix(m));
        for (std::size_t k = 0; k < 3; ++k) {
            double mean = 0.0;
            for (std::size_t i = 0; i < 5; ++i) mean += h(i, k);
            mean /= 5.0;
            CHECK(out(0, k) == doctest::Approx(mean).epsilon(1e-12));
        }
    }
    SUBCASE("2x2 hand-computed product") {
        Matrix lam = Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}});
        Matrix hh = Matrix::identity(2);
        Matrix out = multimix(hh, MixMatrix(lam));
        CHECK(out(0, 0) == doctest::Approx(0.7));
        CHECK(out(0, 1) == doctest::Approx(0.3));
        CHECK(out(1, 0) == doctest::Approx(0.2));
        CHECK(out(1, 1) == doctest::Approx(0.8));
    }
    SUBCASE("dimension mismatch") {
        MixMatrix eye(Matrix::identity(3));
        CHECK_THROWS_AS(multimix(h, eye), ShapeError);
    }
}

TEST_CASE("mixed_bce_loss boundaries and affinity") {
    Rng rng(31);
    SUBCASE("lambda = 1 equals plain BCE") {
        Matrix logits = random_matrix(4, 3, rng);
        Matrix labels = random_labels(4, 3, rng);
        PairingPlan plan{rng.permutation(4)};
        CHECK(mixed_bce_loss(logits, labels, plan, MixCoefficient(1.0)) ==
              bce_loss(logits, labels));
    }
    SUBCASE("zero logits give ln 2 per element") {
        Matrix logits(3, 2, 0.0);
        Matrix labels = Matrix::from_rows({{1.0, 0.0}, {0.0, 0.0}, {1.0, 1.0}});
        PairingPlan plan{{2, 0, 1}};
        CHECK(mixed_bce_loss(logits, labels, plan, MixCoefficient(0.5)) ==
              doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("loss-level form equals BCE against materialized targets") {
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 1 + rng.uniform_index(8);
            const std::size_t c = 1 + rng.uniform_index(5);
            Matrix logits = random_matrix(n, c, rng, -6.0, 6.0);
            Matrix labels = random_labels(n, c, rng);
            PairingPlan plan{rng.permutation(n)};
            MixCoefficient lambda(rng.uniform());
            const double level = mixed_bce_loss(logits, labels, plan, lambda);
            const double materialized = bce_loss(logits, mixed_targets(labels, plan, lambda));
            CHECK(std::abs(level - materialized) <=
                  1e-6 * std::max({1e-30, std::abs(level), std::abs(materialized)}));
        }
    }
    SUBCASE("non-finite logits rejected") {
        Matrix logits(2, 2, 0.0);
        logits(0, 0) = std::numeric_limits<double>::quiet_NaN();
        Matrix labels(2, 2, 0.0);
        PairingPlan plan{{1, 0}};
        CHECK_THROWS_AS(mixed_bce_loss(logits, labels, plan, MixCoefficient(0.5)),
                        NumericError);
    }
}

TEST_CASE("multimix_bce_loss identities and affinity") {
    Rng rng(37);
    SUBCASE("identity matrix equals plain BCE") {
        Matrix logits = random_matrix(4, 3, rng);
        Matrix labels = random_labels(4, 3, rng);
        MixMatrix eye(Matrix::identity(4));
        CHECK(multimix_bce_loss(logits, eye, labels) ==
              doctest::Approx(bce_loss(logits, labels)).epsilon(1e-12));
    }
    SUBCASE("n = 1 reduces to single-example BCE") {
        Matrix logits = random_matrix(1, 4, rng);
        Matrix labels = random_labels(1, 4, rng);
        MixMatrix one(Matrix::identity(1));
        CHECK(multimix_bce_loss(logits, one, labels) == doctest::Approx(bce_loss(logits, labels)));
    }
    SUBCASE("loss-level form equals BCE against mat * Y") {
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 1 + rng.uniform_index(8);
            const std::size_t c = 1 + rng.uniform_index(5);
            Matrix logits = random_matrix(n, c, rng, -6.0, 6.0);
            Matrix labels = random_labels(n, c, rng);
            MixMatrix mat = sample_mix_matrix(n, 0.7, rng);
            const double level = multimix_bce_loss(logits, mat, labels);
            const double materialized = bce_loss(logits, multimix_targets(labels, mat));
            CHECK(std::abs(level - materialized) <=
                  1e-6 * std::max({1e-30, std::abs(level), std::abs(materialized)}));
        }
    }
}

TEST_CASE("select_strategy follows the policy") {
    SUBCASE("degenerate policy always returns its strategy") {
        Rng rng(41);
        Mix2Policy p = Mix2Policy::single(MixStrategy::Mixup);
        for (int i = 0; i < 100; ++i) CHECK(select_strategy(p, rng) == MixStrategy::Mixup);
    }
    SUBCASE("default Mix2 frequencies within 0.02 of 25/50/25") {
        Rng rng(43);
        Mix2Policy p = Mix2Policy::mix2();
        const int n = 100000;
        int counts[4] = {0, 0, 0, 0};
        for (int i = 0; i < n; ++i) counts[static_cast<int>(select_strategy(p, rng))]++;
        CHECK(counts[0] == 0);
        CHECK(std::abs(counts[1] / double(n) - 0.25) < 0.02);
        CHECK(std::abs(counts[2] / double(n) - 0.50) < 0.02);
        CHECK(std::abs(counts[3] / double(n) - 0.25) < 0.02);
    }
    SUBCASE("zero-probability strategy never selected") {
        Rng rng(47);
        Mix2Policy p = Mix2Policy::pair(MixStrategy::Mixup, MixStrategy::ManifoldMixup);
        for (int i = 0; i < 100000; ++i) CHECK(select_strategy(p, rng) != MixStrategy::MultiMix);
    }
    SUBCASE("invalid policy rejected") {
        Rng rng(53);
        Mix2Policy p{0.5, 0.2, 0.0, 0.0};
        CHECK_THROWS_AS(select_strategy(p, rng), ParameterError);
    }
}

TEST_CASE("convex-hull membership bounds every mixing operator") {
    Rng rng(59);
    Matrix h = random_matrix(6, 4, rng);
    std::vector<double> lo(4, 1e300), hi(4, -1e300);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t k = 0; k < 4; ++k) {
            lo[k] = std::min(lo[k], h(i, k));
            hi[k] = std::max(hi[k], h(i, k));
        }
    auto check_bounds = [&](const Matrix& out) {
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t k = 0; k < out.cols(); ++k) {
                CHECK(out(i, k) >= lo[k] - 1e-12);
                CHECK(out(i, k) <= hi[k] + 1e-12);
            }
    };
    for (int trial = 0; trial < 50; ++trial) {
        PairingPlan plan{rng.permutation(6)};
        MixCoefficient lambda(rng.uniform());
        check_bounds(mix_rows(h, plan, lambda));
        check_bounds(multimix(h, sample_mix_matrix(6, 0.5, rng)));
    }
}

TEST_CASE("label mass is linear under the mix matrix") {
    Rng rng(61);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(8);
        Matrix labels = random_labels(n, 5, rng);
        MixMatrix mat = sample_mix_matrix(n, 1.0, rng);
        Matrix mixed = multimix_targets(labels, mat);
        // sum of mixed entries == Lambda applied to per-row label sums
        double lhs = 0.0;
        for (double v : mixed.storage()) lhs += v;
        double rhs = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double row_sum = 0.0;
                for (std::size_t c = 0; c < 5; ++c) row_sum += labels(j, c);
                rhs += mat(i, j) * row_sum;
            }
        CHECK(std::abs(lhs - rhs) <= 1e-9);
    }
}

TEST_CASE("identical seeds reproduce lambda, matrix, plan, and strategy streams") {
    Rng a(71), b(71);
    Mix2Policy policy = Mix2Policy::mix2();
    for (int i = 0; i < 200; ++i) {
        CHECK(sample_beta(0.4, a).lambda == sample_beta(0.4, b).lambda);
        CHECK(sample_pairing(9, a).perm == sample_pairing(9, b).perm);
        CHECK(sample_mix_matrix(5, 1.0, a).matrix() == sample_mix_matrix(5, 1.0, b).matrix());
        CHECK(select_strategy(policy, a) == select_strategy(policy, b));
    }
}
