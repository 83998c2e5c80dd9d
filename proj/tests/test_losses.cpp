// Loss identities: cross-entropy, KL on soft targets, and the combined
// two-term objective.
#include <catch2/catch_amalgamated.hpp>

#include <dlkd/graph.hpp>
#include <dlkd/losses.hpp>
#include <dlkd/ops.hpp>
#include <dlkd/rng.hpp>

#include <cmath>

using namespace dlkd;

namespace {

TensorT<double> random_logits(Rng& rng, std::size_t k, double lo = -8.0, double hi = 8.0) {
    TensorT<double> t({k}, std::vector<double>(k));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

} // namespace

TEST_CASE("cross entropy of uniform logits equals ln K", "[losses]") {
    for (std::size_t k : {2, 4, 8, 16}) {
        TensorT<double> logits({k}, std::vector<double>(k, 0.37));
        for (std::size_t label = 0; label < k; ++label) {
            double ce = cross_entropy_value(logits, label);
            REQUIRE(ce == Catch::Approx(std::log(double(k))).margin(1e-5));
        }
    }
    // Frozen hand value: K=4 uniform => ln 4.
    TensorT<double> l4({4}, {0.0, 0.0, 0.0, 0.0});
    REQUIRE(cross_entropy_value(l4, 2) == Catch::Approx(1.3862943611198906).margin(1e-9));
}

TEST_CASE("cross entropy frozen two-class hand value", "[losses]") {
    // CE([1,0], label 0) = ln(1 + e^-1) = 0.31326168751822286.
    TensorT<double> logits({2}, {1.0, 0.0});
    REQUIRE(cross_entropy_value(logits, 0) ==
            Catch::Approx(0.31326168751822286).margin(1e-9));
    // softmax([1,0]) = (0.7310585786300049, 0.2689414213699951).
    TensorT<double> p = softmax_forward(logits, 1.0);
    REQUIRE(p.data[0] == Catch::Approx(0.7310585786300049).margin(1e-12));
    REQUIRE(p.data[1] == Catch::Approx(0.2689414213699951).margin(1e-12));
}

TEST_CASE("cross entropy is nonnegative and decreases in the true logit", "[losses]") {
    Rng rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t k = 2 + rng.uniform_index(7);
        TensorT<double> logits = random_logits(rng, k);
        std::size_t label = rng.uniform_index(k);
        double ce = cross_entropy_value(logits, label);
        REQUIRE(ce >= 0.0);

        TensorT<double> better = logits;
        better.data[label] += 0.5;
        REQUIRE(cross_entropy_value(better, label) < ce);
    }
}

TEST_CASE("cross entropy rejects an out-of-range label", "[losses]") {
    TensorT<double> logits({3}, {0.1, 0.2, 0.3});
    REQUIRE_THROWS_AS(cross_entropy_value(logits, 3), InputError);
}

TEST_CASE("KL of a distribution with itself is zero", "[losses]") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t k = 2 + rng.uniform_index(7);
        TensorT<double> logits = random_logits(rng, k);
        double kl = kl_soft_targets_value(logits, logits, 1.0);
        REQUIRE(std::abs(kl) < 1e-9);
    }
}

TEST_CASE("KL is nonnegative on 1000 random logit pairs", "[losses]") {
    Rng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t k = 2 + rng.uniform_index(7);
        TensorT<double> a = random_logits(rng, k);
        TensorT<double> b = random_logits(rng, k);
        double t = rng.uniform(0.5, 4.0);
        REQUIRE(kl_soft_targets_value(a, b, t) >= -1e-12);
    }
}

TEST_CASE("KL is invariant to constant shifts of either logit vector", "[losses]") {
    Rng rng(51);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t k = 2 + rng.uniform_index(7);
        TensorT<double> a = random_logits(rng, k);
        TensorT<double> b = random_logits(rng, k);
        double base = kl_soft_targets_value(a, b, 1.0);

        TensorT<double> a2 = a, b2 = b;
        double ca = rng.uniform(-20.0, 20.0), cb = rng.uniform(-20.0, 20.0);
        for (auto& v : a2.data) v += ca;
        for (auto& v : b2.data) v += cb;
        REQUIRE(kl_soft_targets_value(a2, b2, 1.0) == Catch::Approx(base).margin(1e-8));
    }
}

TEST_CASE("KL frozen hand value for a two-class pair", "[losses]") {
    // teacher logits (0,0) -> p = (1/2, 1/2); student (ln 3, 0) -> q = (3/4, 1/4).
    // KL = 0.5*ln(0.5/0.75) + 0.5*ln(0.5/0.25) = 0.5*ln(4/3) = 0.14384103622589045.
    TensorT<double> teacher({2}, {0.0, 0.0});
    TensorT<double> student({2}, {std::log(3.0), 0.0});
    REQUIRE(kl_soft_targets_value(teacher, student, 1.0) ==
            Catch::Approx(0.14384103622589045).margin(1e-9));
}

TEST_CASE("no gradient reaches teacher logits through the KD loss", "[losses]") {
    // The teacher enters as a detached constant: after backward, only the
    // student parameter node carries gradient.
    GraphT<double> g;
    TensorT<double> student({4}, {0.3, -0.2, 0.9, 0.0});
    TensorT<double> teacher({4}, {1.0, 0.0, -1.0, 0.5});
    auto sn = g.parameter(student);
    auto loss = kl_soft_targets(g, teacher, sn, 2.0);
    g.backward(loss);
    REQUIRE(g.grad(sn).size() == 4);
    REQUIRE(teacher.grad.empty());
}

TEST_CASE("combined loss is linear in alpha and beta", "[losses]") {
    Rng rng(61);
    for (int trial = 0; trial < 1000; ++trial) {
        double l_ar = rng.uniform(0.0, 5.0);
        double l_kd = rng.uniform(0.0, 5.0);
        LossWeights w;
        w.alpha = rng.uniform(0.0, 3.0);
        w.beta = rng.uniform(0.0, 3.0);
        if (w.alpha + w.beta <= 0) continue;
        double l1 = student_total_loss_value(l_ar, l_kd, w);
        LossWeights w2 = w;
        w2.alpha *= 2.0;
        w2.beta *= 2.0;
        double l2 = student_total_loss_value(l_ar, l_kd, w2);
        REQUIRE(l2 == Catch::Approx(2.0 * l1).margin(1e-7));
        REQUIRE(l1 == Catch::Approx(w.alpha * l_ar + w.beta * l_kd).margin(1e-12));
    }
}

TEST_CASE("combined loss in-graph matches the scalar identity", "[losses]") {
    GraphT<double> g;
    TensorT<double> student({3}, {0.2, -0.4, 0.7});
    TensorT<double> teacher({3}, {0.9, 0.1, -0.3});
    std::size_t label = 1;
    LossWeights w;
    w.alpha = 0.7;
    w.beta = 1.3;
    auto sn = g.parameter(student);
    auto l_ar = cross_entropy(g, sn, label);
    auto l_kd = kl_soft_targets(g, teacher, sn, w.temperature);
    auto total = student_total_loss(g, l_ar, l_kd, w);
    double expect = w.alpha * cross_entropy_value(student, label) +
                    w.beta * kl_soft_targets_value(teacher, student, w.temperature);
    REQUIRE(g.value(total).scalar_value() == Catch::Approx(expect).margin(1e-10));
}

TEST_CASE("softmax argmax is invariant under temperature and shift", "[losses]") {
    Rng rng(71);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t k = 2 + rng.uniform_index(7);
        TensorT<double> logits = random_logits(rng, k);
        std::size_t argmax_l = 0;
        for (std::size_t i = 1; i < k; ++i)
            if (logits.data[i] > logits.data[argmax_l]) argmax_l = i;

        double t = rng.uniform(0.1, 10.0);
        double c = rng.uniform(-30.0, 30.0);
        TensorT<double> shifted = logits;
        for (auto& v : shifted.data) v += c;
        TensorT<double> p = softmax_forward(shifted, t);
        std::size_t argmax_p = 0;
        for (std::size_t i = 1; i < k; ++i)
            if (p.data[i] > p.data[argmax_p]) argmax_p = i;
        REQUIRE(argmax_p == argmax_l);
    }
}

TEST_CASE("loss weights validation rejects invalid settings", "[losses]") {
    LossWeights w;
    w.alpha = -0.1;
    REQUIRE_THROWS_AS(w.validate(), ParamError);
    w.alpha = 0.0;
    w.beta = 0.0;
    REQUIRE_THROWS_AS(w.validate(), ParamError);
    w.beta = 1.0;
    w.temperature = 0.0;
    REQUIRE_THROWS_AS(w.validate(), ParamError);
}
