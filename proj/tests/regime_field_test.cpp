#include <doctest.h>

#include <random>
#include <sstream>

#include "lqswitch/regime_field.hpp"
#include "test_support.hpp"

using namespace lqswitch;

TEST_CASE("grid layout") {
    const Grid g(1.0, 10, 1.35);
    CHECK(g.step() == doctest::Approx(0.1));
    CHECK(g.n_time_nodes() == 11);
    // top elapsed node must cover e_max
    CHECK(g.elapsed_node(g.elapsed_top()) >= 1.35 - 1e-12);
    CHECK_THROWS_AS(Grid(1.0, 10, 0.5), std::invalid_argument); // e_max < horizon
    CHECK_THROWS_AS(Grid(-1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(Grid(1.0, 0), std::invalid_argument);
}

TEST_CASE("constant field evaluates to the constant everywhere") {
    const Grid g(2.0, 8);
    Matrix m(2, 2);
    m << 1.0, 0.25, 0.25, -0.5;
    const RegimeField f = RegimeField::constant(g, 3, m);
    CHECK((f.eval(0.37, 1.41, 2) - m).norm() == doctest::Approx(0.0));
    CHECK((f.eval(2.0, 2.0, 0) - m).norm() == doctest::Approx(0.0));
}

TEST_CASE("evaluation at a grid node returns the stored matrix exactly") {
    const Grid g(1.0, 5);
    const RegimeField f = RegimeField::from_function(
        g, 1, 2, [](double t, double e, int i) {
            return lqtest::scalar(std::sin(3 * t) + std::cos(2 * e) + i);
        });
    for (int k = 0; k <= 5; ++k)
        for (int m = 0; m <= g.elapsed_top(); ++m)
            for (int i = 0; i < 2; ++i) {
                const double stored = f.node(k, m, i)(0, 0);
                const double evaled =
                    f.eval(g.time_node(k), g.elapsed_node(m), i)(0, 0);
                CHECK(evaled == stored); // bitwise
            }
}

TEST_CASE("bilinear interpolation is exact on affine fields") {
    const Grid g(1.0, 10);
    const RegimeField f = RegimeField::from_function(
        g, 2, 1, [](double t, double e, int) {
            return Matrix(Matrix::Identity(2, 2) * (t + e));
        });
    const double dt = g.step();
    const Matrix got = f.eval(dt / 2, dt / 2, 0);
    CHECK((got - dt * Matrix::Identity(2, 2)).norm() <= 1e-12);
    const Matrix got2 = f.eval(0.33, 0.77, 0);
    CHECK((got2 - 1.1 * Matrix::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("eval rejects out-of-domain arguments") {
    const Grid g(1.0, 4);
    const RegimeField f = RegimeField::constant(g, 1, lqtest::scalar(1.0));
    CHECK_THROWS_AS(f.eval(-0.1, 0.0, 0), std::out_of_range);
    CHECK_THROWS_AS(f.eval(1.5, 0.0, 0), std::out_of_range);
    CHECK_THROWS_AS(f.eval(0.5, 2.0, 0), std::out_of_range);
    CHECK_THROWS_AS(f.eval(0.5, 0.5, 3), std::out_of_range);
}

TEST_CASE("psd_floor") {
    const Grid g(1.0, 4);
    SUBCASE("identity") {
        CHECK(psd_floor(RegimeField::constant(g, 2, Matrix::Identity(2, 2))) ==
              doctest::Approx(1.0));
    }
    SUBCASE("zero") {
        CHECK(psd_floor(RegimeField(g, 2, 2)) == doctest::Approx(0.0));
    }
    SUBCASE("constructed witness") {
        RegimeField f = RegimeField::constant(g, 1, Matrix::Identity(2, 2));
        Matrix bad(2, 2);
        bad << 1.0, 0.0, 0.0, -0.5;
        f.set_node(2, 1, 0, bad);
        CHECK(psd_floor(f) == doctest::Approx(-0.5));
    }
}

TEST_CASE("field_distance is a metric") {
    const Grid g(1.0, 6);
    const RegimeField f1 = RegimeField::constant(g, 2, Matrix::Identity(2, 2));

    SUBCASE("identical fields") { CHECK(field_distance(f1, f1) == 0.0); }

    SUBCASE("constant shift") {
        const RegimeField f2 =
            RegimeField::constant(g, 2, Matrix(1.25 * Matrix::Identity(2, 2)));
        CHECK(field_distance(f1, f2) == doctest::Approx(0.25));
        CHECK(field_distance(f2, f1) == doctest::Approx(0.25)); // symmetry
    }

    SUBCASE("triangle inequality on random fields") {
        std::mt19937_64 gen(31);
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto random_field = [&]() {
            return RegimeField::from_function(g, 2, 2, [&](double, double, int) {
                Matrix m(2, 2);
                m << gauss(gen), gauss(gen), gauss(gen), gauss(gen);
                return Matrix(symmetrized(m));
            });
        };
        for (int trial = 0; trial < 30; ++trial) {
            const RegimeField a = random_field();
            const RegimeField b = random_field();
            const RegimeField c = random_field();
            CHECK(field_distance(a, c) <=
                  field_distance(a, b) + field_distance(b, c) + 1e-12);
            CHECK(field_distance(a, b) >= 0.0);
        }
    }

    SUBCASE("grid mismatch throws") {
        const Grid g2(1.0, 7);
        CHECK_THROWS_AS(
            field_distance(f1, RegimeField::constant(g2, 2, Matrix::Identity(2, 2))),
            std::invalid_argument);
    }
}

TEST_CASE("csv export shape") {
    const Grid g(1.0, 2);
    const RegimeField f = RegimeField::constant(g, 2, Matrix::Identity(2, 2));
    std::ostringstream out;
    write_field_csv(f, {"up", "down"}, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,e,mark,p_11,p_12,p_22");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == g.n_time_nodes() * g.n_elapsed_nodes() * 2);
}

TEST_CASE("coefficient validation flags violations") {
    CoefficientSet cs = lqtest::scalar_coeffs({{0.3}, {1.0}, {0.2}, {0.5}, {1.0}, 1});
    CHECK_NOTHROW(cs.validate_at(0.0, 0.0, 0));

    SUBCASE("bound violation") {
        cs.bounds.M_A = 0.1; // actual |A| = 0.3
        CHECK_THROWS_WITH_AS(cs.validate_at(0.0, 0.0, 0),
                             doctest::Contains("A"), std::invalid_argument);
    }
    SUBCASE("indefinite S") {
        cs.S = [](double, double, int) { return lqtest::scalar(-0.2); };
        CHECK_THROWS_WITH_AS(cs.validate_at(0.0, 0.0, 0),
                             doctest::Contains("positive semidefinite"),
                             std::invalid_argument);
    }
    SUBCASE("asymmetric S") {
        CoefficientSet cs2 = cs;
        cs2.n = 2;
        auto eye = [](double, double, int) { return Matrix(Matrix::Identity(2, 2)); };
        cs2.A = eye;
        cs2.B = [](double, double, int) { return Matrix(Matrix::Ones(2, 1)); };
        cs2.C = {eye};
        cs2.S = [](double, double, int) {
            Matrix m(2, 2);
            m << 1.0, 0.5, 0.0, 1.0;
            return m;
        };
        cs2.G = [](double, int) { return Matrix(Matrix::Identity(2, 2)); };
        cs2.bounds = {1.0, 2.0, 1.0, 1.0, 2.0};
        CHECK_THROWS_WITH_AS(cs2.validate_at(0.0, 0.0, 0),
                             doctest::Contains("symmetric"), std::invalid_argument);
    }
}

TEST_CASE("gronwall constant") {
    CoefficientBounds b{0.5, 0.0, 0.3, 0.0, 0.0};
    CHECK(gronwall_constant(b, 2, 1.0) ==
          doctest::Approx(std::exp(2 * 0.5 + 2 * 0.09)));
    CHECK(gronwall_constant(b, 0, 0.0) == doctest::Approx(1.0));
}
