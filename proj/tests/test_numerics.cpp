#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "simulmt/grad_check.hpp"
#include "simulmt/ops.hpp"
#include "simulmt/param_store.hpp"
#include "simulmt/rng.hpp"

using namespace simulmt;

namespace {

Array random_vec(int n, Rng& rng, double scale = 1.0) {
    Array v({n});
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(-scale, scale);
    return v;
}

}  // namespace

TEST_CASE("softmax of a uniform vector is uniform") {
    const Array p = softmax(Array::vec({1.3, 1.3, 1.3, 1.3}));
    for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one on random inputs") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + rng.uniform_int(32);
        const Array p = softmax(random_vec(n, rng, 10.0));
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            sum += p[i];
            CHECK(p[i] >= 0.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cross entropy of a near-delta distribution is near zero") {
    const Array p = softmax(Array::vec({30.0, 0.0, 0.0}));
    CHECK(cross_entropy(p, 0) < 1e-9);
}

TEST_CASE("weighted_sum with probability weights stays in the box") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const int eta = 1 + rng.uniform_int(8);
        const int dim = 1 + rng.uniform_int(16);
        std::vector<Array> rows;
        for (int i = 0; i < eta; ++i) rows.push_back(random_vec(dim, rng));
        const Array w = softmax(random_vec(eta, rng, 3.0));
        const Array c = weighted_sum(rows, w);
        for (int j = 0; j < dim; ++j) {
            double lo = rows[0][static_cast<std::size_t>(j)], hi = lo;
            for (const auto& r : rows) {
                lo = std::min(lo, r[static_cast<std::size_t>(j)]);
                hi = std::max(hi, r[static_cast<std::size_t>(j)]);
            }
            CHECK(c[static_cast<std::size_t>(j)] >= lo - 1e-12);
            CHECK(c[static_cast<std::size_t>(j)] <= hi + 1e-12);
        }
    }
}

TEST_CASE("gru zero fixed point and gate collapse") {
    ParamStore store;
    Rng rng(1);
    GruWeights w = GruWeights::create(store, "g", 3, 3, rng);
    for (auto& [_, p] : store.all()) p.value.fill(0.0);

    const Array x({3});
    SUBCASE("zero params, zero state") {
        const Array h = gru_step(w, x, Array({3}));
        for (std::size_t i = 0; i < 3; ++i) CHECK(h[i] == 0.0);
    }
    SUBCASE("zero params map h to h/2") {
        const Array h_prev = Array::vec({0.4, -1.0, 2.5});
        const Array h = gru_step(w, x, h_prev);
        for (std::size_t i = 0; i < 3; ++i) CHECK(h[i] == doctest::Approx(0.5 * h_prev[i]).epsilon(1e-12));
    }
}

TEST_CASE("gru rejects mismatched dimensions and non-finite input") {
    ParamStore store;
    Rng rng(2);
    GruWeights w = GruWeights::create(store, "g", 4, 5, rng);
    CHECK_THROWS(gru_step(w, Array({3}), Array({5})));
    CHECK_THROWS(gru_step(w, Array({4}), Array({4})));
    Array bad({4});
    bad[0] = std::nan("");
    CHECK_THROWS(gru_step(w, bad, Array({5})));
}

// Finite-difference oracle for the full primitive set chained into one
// scalar loss: affine -> gru -> softmax -> cross_entropy, plus concat,
// weighted_sum, tanh, sigmoid and embedding paths.
TEST_CASE("primitive backward passes match central finite differences") {
    Rng rng(20260810);
    for (int trial = 0; trial < 3; ++trial) {
        const int in = 2 + rng.uniform_int(6);   // up to 8
        const int hid = 2 + rng.uniform_int(14);  // up to 16
        ParamStore store;
        Rng init = rng.fork(trial);
        GruWeights gru = GruWeights::create(store, "g", in, hid, init);
        store.add("emb", {4, in}, Init::kUniform, &init);
        store.add("w_out", {3, hid}, Init::kUniform, &init);
        store.add("b_out", {3});
        store.add("mix", {4}, Init::kUniform, &init);

        const Array h0 = random_vec(hid, init, 0.5);
        const int target = init.uniform_int(3);

        auto loss = [&]() {
            Parameter& emb = store.param("emb");
            std::vector<Array> rows;
            for (int r = 0; r < 4; ++r) rows.push_back(embedding_row(emb.value, r));
            const Array w = softmax(store.param("mix").value);
            Array pooled({in});
            {
                Array tmp = weighted_sum(rows, w);
                pooled = tanh_vec(tmp);
            }
            const Array x = sigmoid_vec(pooled);
            const Array h = gru_step(gru, x, h0);
            const Array p = softmax(affine(store.param("w_out").value, store.param("b_out").value, h));
            return cross_entropy(p, target);
        };
        auto backward = [&]() {
            store.zero_grads();
            Parameter& emb = store.param("emb");
            std::vector<Array> rows;
            for (int r = 0; r < 4; ++r) rows.push_back(embedding_row(emb.value, r));
            const Array w = softmax(store.param("mix").value);
            const Array pooled_pre = weighted_sum(rows, w);
            const Array pooled = tanh_vec(pooled_pre);
            const Array x = sigmoid_vec(pooled);
            GruCache cache;
            const Array h = gru_step(gru, x, h0, &cache);
            const Array logits = affine(store.param("w_out").value, store.param("b_out").value, h);
            const Array p = softmax(logits);

            Array dp({3});
            cross_entropy_backward(p, target, 1.0, &dp);
            Array dlogits({3});
            softmax_backward(p, dp, &dlogits);
            Array dh({hid});
            affine_backward(store.param("w_out").value, h, dlogits, &store.param("w_out").grad,
                            &store.param("b_out").grad, &dh);
            Array dx({in});
            gru_step_backward(gru, cache, dh, &dx, nullptr);
            Array dpooled({in});
            sigmoid_vec_backward(x, dx, &dpooled);
            Array dpool_pre({in});
            tanh_vec_backward(pooled, dpooled, &dpool_pre);
            std::vector<Array> drows(4, Array({in}));
            Array dw({4});
            weighted_sum_backward(rows, w, dpool_pre, &drows, &dw);
            softmax_backward(w, dw, &store.param("mix").grad);
            for (int r = 0; r < 4; ++r) embedding_row_backward(&emb.grad, r, drows[static_cast<std::size_t>(r)]);
        };

        GradCheckOptions opts;
        opts.tolerance = 1e-6;
        const auto report = grad_check(store, loss, backward, opts);
        INFO("worst rel err ", report.worst_rel_err);
        CHECK(report.ok());
    }
}

TEST_CASE("affine backward on a random 5x3 case agrees with finite differences") {
    ParamStore store;
    Rng rng(99);
    store.add("W", {5, 3}, Init::kUniform, &rng);
    store.add("b", {5}, Init::kUniform, &rng);
    const Array x = random_vec(3, rng);
    const Array probe = random_vec(5, rng);  // fixed projection makes the loss scalar

    auto loss = [&]() { return dot(probe, affine(store.param("W").value, store.param("b").value, x)); };
    auto backward = [&]() {
        store.zero_grads();
        affine_backward(store.param("W").value, x, probe, &store.param("W").grad, &store.param("b").grad, nullptr);
    };
    GradCheckOptions opts;
    opts.tolerance = 1e-6;
    CHECK(grad_check(store, loss, backward, opts).ok());
}

TEST_CASE("adam with zero gradients is the identity on parameters") {
    ParamStore store;
    Rng rng(3);
    store.add("w", {4, 4}, Init::kUniform, &rng);
    const Array before = store.param("w").value;
    for (int i = 0; i < 10; ++i) adam_update(store, AdamConfig{0.1});
    CHECK(store.param("w").value == before);
}

TEST_CASE("adam first step with unit gradient moves by about lr") {
    ParamStore store;
    store.add("w", {1});
    store.param("w").value[0] = 1.0;
    store.param("w").grad[0] = 1.0;
    adam_update(store, AdamConfig{0.1});
    // bias correction makes the first step lr * g/(|g| + eps')
    CHECK(store.param("w").value[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adam steady state approaches lr * sign(g)") {
    ParamStore store;
    store.add("w", {1});
    const double lr = 0.05;
    double prev = store.param("w").value[0];
    for (int i = 0; i < 200; ++i) {
        store.param("w").grad[0] = 2.5;
        prev = store.param("w").value[0];
        adam_update(store, AdamConfig{lr});
    }
    CHECK(std::fabs(prev - store.param("w").value[0]) == doctest::Approx(lr).epsilon(1e-3));
}

TEST_CASE("adam aborts on non-finite gradients naming the parameter") {
    ParamStore store;
    store.add("w", {2});
    store.add("ok", {2});
    store.param("w").grad[1] = std::numeric_limits<double>::infinity();
    const Array before = store.param("w").value;
    CHECK_THROWS_WITH_AS(adam_update(store, AdamConfig{0.1}), doctest::Contains("w"), std::runtime_error);
    CHECK(store.param("w").value == before);  // step aborted before mutating
}

TEST_CASE("grad_check is exact on a quadratic and flags a corrupted backward") {
    ParamStore store;
    Rng rng(5);
    store.add("theta", {6}, Init::kUniform, &rng);
    auto loss = [&]() {
        double s = 0.0;
        const Array& v = store.param("theta").value;
        for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * v[i];
        return s;
    };
    auto backward = [&]() {
        store.zero_grads();
        const Array& v = store.param("theta").value;
        for (std::size_t i = 0; i < v.size(); ++i) store.param("theta").grad[i] = 2.0 * v[i];
    };
    GradCheckOptions opts;
    opts.tolerance = 1e-9;
    CHECK(grad_check(store, loss, backward, opts).ok());

    auto corrupted = [&]() {
        backward();
        store.param("theta").grad[2] = -store.param("theta").grad[2];  // sign flip
    };
    const auto report = grad_check(store, loss, corrupted, GradCheckOptions{});
    CHECK_FALSE(report.ok());
    CHECK(report.flagged_names() == std::vector<std::string>{"theta"});
}

TEST_CASE("gru backward matches finite differences on dims (8, 16)") {
    ParamStore store;
    Rng rng(41);
    GruWeights w = GruWeights::create(store, "g", 8, 16, rng);
    const Array x = random_vec(8, rng);
    const Array h0 = random_vec(16, rng);
    const Array probe = random_vec(16, rng);

    auto loss = [&]() { return dot(probe, gru_step(w, x, h0)); };
    auto backward = [&]() {
        store.zero_grads();
        GruCache cache;
        gru_step(w, x, h0, &cache);
        gru_step_backward(w, cache, probe, nullptr, nullptr);
    };
    GradCheckOptions opts;
    opts.tolerance = 1e-6;
    const auto report = grad_check(store, loss, backward, opts);
    INFO("worst rel err ", report.worst_rel_err);
    CHECK(report.ok());
}

TEST_CASE("rng streams are deterministic and fork-independent") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(123);
    Rng child1 = c.fork(1);
    Rng child2 = c.fork(1);
    CHECK(child1.next_u64() == child2.next_u64());
    CHECK(c.next_u64() == Rng(123).next_u64());  // fork does not advance the parent
}
