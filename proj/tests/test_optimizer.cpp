#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "castor/optimizer.hpp"
#include "castor/tensor.hpp"

using namespace castor;

TEST_SUITE("optimizer") {

TEST_CASE("first adam step matches the closed form") {
    // With w = 0, g = 1 and fresh moments, the bias corrections cancel the
    // moment decay exactly, so step 1 is -lr * 1 / (1 + eps).
    Tensor<double> w({1}, {0.0});
    Tensor<double> g({1}, {1.0});
    AdamState<double> state;
    state.lr = 2e-5;
    adam_step<double>({&w}, {&g}, state);
    const double expected = -(2e-5 * 1.0 / (1.0 + 1e-8));
    CHECK(w.data[0] == doctest::Approx(expected).epsilon(1e-14));
    CHECK(state.t == 1);

    // A negative gradient moves the weight the other way by symmetry.
    Tensor<double> w2({1}, {0.0});
    Tensor<double> g2({1}, {-1.0});
    AdamState<double> s2;
    s2.lr = 2e-5;
    adam_step<double>({&w2}, {&g2}, s2);
    CHECK(w2.data[0] == doctest::Approx(-expected).epsilon(1e-14));
}

TEST_CASE("zero gradient leaves parameters bitwise unchanged") {
    Tensor<double> w({3}, {0.25, -1.5, 3.75});
    Tensor<double> before = w;
    Tensor<double> g = Tensor<double>::zeros({3});
    AdamState<double> state;
    for (int step = 0; step < 5; ++step) adam_step<double>({&w}, {&g}, state);
    for (std::size_t i = 0; i < w.numel(); ++i) {
        CHECK(std::memcmp(&w.data[i], &before.data[i], sizeof(double)) == 0);
    }
}

TEST_CASE("constant positive gradient descends monotonically") {
    Tensor<double> w({1}, {1.0});
    Tensor<double> g({1}, {0.5});
    AdamState<double> state;
    state.lr = 1e-2;
    double prev = w.data[0];
    for (int step = 0; step < 10; ++step) {
        adam_step<double>({&w}, {&g}, state);
        CHECK(w.data[0] < prev);
        prev = w.data[0];
    }
}

TEST_CASE("identical inputs give bitwise identical trajectories") {
    auto run = [] {
        Tensor<float> w({4}, {0.1f, -0.2f, 0.3f, -0.4f});
        Tensor<float> g({4}, {0.01f, 0.02f, -0.03f, 0.5f});
        AdamState<float> state;
        state.lr = 1e-3;
        for (int step = 0; step < 25; ++step) adam_step<float>({&w}, {&g}, state);
        return w;
    };
    Tensor<float> a = run();
    Tensor<float> b = run();
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.numel() * sizeof(float)) == 0);
}

TEST_CASE("mismatched inputs are rejected") {
    Tensor<double> w({2}, {0.0, 0.0});
    Tensor<double> g({2}, {1.0, 1.0});
    Tensor<double> g3({3}, {1.0, 1.0, 1.0});
    AdamState<double> state;
    CHECK_THROWS_AS(adam_step<double>({&w}, {}, state), ShapeMismatch);
    CHECK_THROWS_AS(adam_step<double>({&w}, {&g3}, state), ShapeMismatch);

    // State initialized for one parameter cannot serve two.
    AdamState<double> used;
    adam_step<double>({&w}, {&g}, used);
    Tensor<double> w2({2}, {0.0, 0.0});
    CHECK_THROWS_AS(adam_step<double>({&w, &w2}, {&g, &g}, used), ShapeMismatch);
}

TEST_CASE("global norm clipping") {
    SUBCASE("below the threshold is untouched") {
        Tensor<double> g({2}, {3.0, 4.0});
        double norm = clip_by_global_norm<double>({&g}, 10.0);
        CHECK(norm == doctest::Approx(5.0).epsilon(1e-15));
        CHECK(g.data[0] == 3.0);
        CHECK(g.data[1] == 4.0);
    }
    SUBCASE("above the threshold is rescaled and the pre-clip norm returned") {
        Tensor<double> g({2}, {3.0, 4.0});
        double norm = clip_by_global_norm<double>({&g}, 1.0);
        CHECK(norm == doctest::Approx(5.0).epsilon(1e-15));
        CHECK(g.data[0] == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(g.data[1] == doctest::Approx(0.8).epsilon(1e-12));
        double post = std::sqrt(g.data[0] * g.data[0] + g.data[1] * g.data[1]);
        CHECK(post == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("the norm spans all tensors in the list") {
        Tensor<double> a({1}, {3.0});
        Tensor<double> b({1}, {4.0});
        double norm = clip_by_global_norm<double>({&a, &b}, 2.5);
        CHECK(norm == doctest::Approx(5.0).epsilon(1e-15));
        CHECK(a.data[0] == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(b.data[0] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("all-zero gradients are a no-op") {
        Tensor<double> g = Tensor<double>::zeros({4});
        double norm = clip_by_global_norm<double>({&g}, 1.0);
        CHECK(norm == 0.0);
        for (double v : g.data) CHECK(v == 0.0);
    }
}

TEST_CASE("seeded initialization") {
    SUBCASE("uniform draws stay inside +-1/sqrt(fan_in)") {
        // Shape {4, 8}: numel 32, last dim 8, so fan_in = 4 and the bound 0.5.
        Tensor<float> t = seeded_init<float>({4, 8}, InitScheme::UniformScaled, 7);
        float lo = 1.0f, hi = -1.0f;
        for (float v : t.data) {
            CHECK(v >= -0.5f);
            CHECK(v < 0.5f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        // 32 draws from a width-1 interval should cover a decent spread.
        CHECK(hi - lo > 0.4f);
    }
    SUBCASE("rank-1 shapes use fan_in 1") {
        Tensor<float> t = seeded_init<float>({16}, InitScheme::UniformScaled, 11);
        for (float v : t.data) {
            CHECK(v >= -1.0f);
            CHECK(v < 1.0f);
        }
    }
    SUBCASE("same seed reproduces, different seed diverges") {
        Tensor<float> a = seeded_init<float>({3, 5}, InitScheme::UniformScaled, 42);
        Tensor<float> b = seeded_init<float>({3, 5}, InitScheme::UniformScaled, 42);
        Tensor<float> c = seeded_init<float>({3, 5}, InitScheme::UniformScaled, 43);
        CHECK(std::memcmp(a.data.data(), b.data.data(), a.numel() * sizeof(float)) == 0);
        CHECK(std::memcmp(a.data.data(), c.data.data(), a.numel() * sizeof(float)) != 0);
    }
    SUBCASE("zeros and ones schemes") {
        Tensor<float> z = seeded_init<float>({2, 3}, InitScheme::Zeros, 0);
        for (float v : z.data) CHECK(v == 0.0f);
        Tensor<float> o = seeded_init<float>({2, 3}, InitScheme::Ones, 0);
        for (float v : o.data) CHECK(v == 1.0f);
    }
}

}  // TEST_SUITE
