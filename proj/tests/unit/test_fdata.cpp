#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "funcause/fdata.hpp"

using namespace funcause;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Dataset small_dataset(bool with_curves) {
    const Grid g = Grid::uniform(5);
    const Grid gc = Grid::uniform(4);
    std::vector<ObservationalSample> s;
    for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd v(2);
        v << 0.1 * i, -1.0 / 3.0 + i;
        ObservationalSample o{"u" + std::to_string(i), static_cast<double>(i % 2), v, std::nullopt,
                              Curve::from_function(g, [i](double t) { return std::sin(t + i) / 7.0; })};
        if (with_curves) o.covariate_curve = Curve::from_function(gc, [i](double t) { return t * t * i + 1e-17; });
        s.push_back(std::move(o));
    }
    return Dataset(std::move(s));
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid::uniform(1), DomainError);
    CHECK_THROWS_AS(Grid(std::vector<double>{0.0, 0.3, 1.0}), DomainError);
    CHECK_THROWS_AS(Grid(std::vector<double>{0.1, 0.55, 1.0}), DomainError);
    const Grid g = Grid::uniform(11);
    CHECK(g[0] == 0.0);
    CHECK(g[10] == 1.0);
    CHECK(g.quadrature_weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("curve rejects non-finite values and wrong length") {
    const Grid g = Grid::uniform(3);
    CHECK_THROWS_AS(Curve(g, Eigen::VectorXd::Zero(4)), DomainError);
    Eigen::VectorXd v(3);
    v << 0.0, NAN, 1.0;
    CHECK_THROWS_AS(Curve(g, v), DomainError);
}

TEST_CASE("l2 norm of a constant") {
    const Grid g = Grid::uniform(17);
    CHECK(l2_norm(Curve::constant(g, 2.0)) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("derivative") {
    SUBCASE("linear is exact") {
        const Curve c = Curve::from_function(Grid::uniform(11), [](double t) { return t; });
        const Curve d = derivative(c);
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(d[i] - 1.0) <= 1e-10);
    }
    SUBCASE("quadratic against 2t") {
        const Curve c = Curve::from_function(Grid::uniform(101), [](double t) { return t * t; });
        const Curve d = derivative(c);
        double worst = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(d[i] - 2.0 * c.grid()[i]));
        CHECK(worst <= 1e-3);
    }
    SUBCASE("constant gives zero") {
        const Curve d = derivative(Curve::constant(Grid::uniform(9), 3.5));
        CHECK(d.values().cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("too small") { CHECK_THROWS_AS(derivative(Curve::constant(Grid::uniform(2), 1.0)), GridTooSmall); }
    SUBCASE("linearity") {
        const Grid g = Grid::uniform(40);
        const Curve a = Curve::from_function(g, [](double t) { return std::exp(t); });
        const Curve b = Curve::from_function(g, [](double t) { return std::cos(5 * t); });
        const Eigen::VectorXd lhs = derivative(a + b).values();
        const Eigen::VectorXd rhs = derivative(a).values() + derivative(b).values();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("smoothing keeps constants") {
        const Curve d = derivative(Curve::constant(Grid::uniform(20), -1.0), 5);
        CHECK(d.values().cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("resample") {
    const Grid g64 = Grid::uniform(64);
    const Grid g256 = Grid::uniform(256);
    const Curve s = Curve::from_function(g64, [](double t) { return std::sin(kTwoPi * t); });

    SUBCASE("own grid is identity") { CHECK(resample(s, g64).values() == s.values()); }

    SUBCASE("affine curves are exact") {
        const Curve a = Curve::from_function(Grid::uniform(7), [](double t) { return 3.0 - 2.0 * t; });
        for (auto method : {Interpolation::Linear, Interpolation::NaturalCubic}) {
            const Curve r = resample(a, Grid::uniform(23), method);
            for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(r[i] - (3.0 - 2.0 * r.grid()[i])) <= 1e-13);
        }
    }

    SUBCASE("sine round trip with the cubic spline") {
        const Curve back = resample(resample(s, g256, Interpolation::NaturalCubic), g64, Interpolation::NaturalCubic);
        CHECK((back.values() - s.values()).cwiseAbs().maxCoeff() <= 1e-6);
    }

    SUBCASE("sine round trip with linear interpolation stays within the interpolation bound") {
        const Curve back = resample(resample(s, g256), g64);
        const double curvature = kTwoPi * kTwoPi;
        const double bound = curvature / 8.0 * (std::pow(1.0 / 63, 2) + std::pow(1.0 / 255, 2));
        CHECK((back.values() - s.values()).cwiseAbs().maxCoeff() <= bound);
    }
}

TEST_CASE("moving average keeps windows centered") {
    Eigen::VectorXd v(5);
    v << 0.0, 3.0, 0.0, 3.0, 0.0;
    const Curve m = moving_average(Curve(Grid::uniform(5), v), 3);
    CHECK(m[0] == 0.0);
    CHECK(m[1] == doctest::Approx(1.0));
    CHECK(m[2] == doctest::Approx(2.0));
    CHECK(m[4] == 0.0);
    const Curve lin = Curve::from_function(Grid::uniform(9), [](double t) { return 2.0 * t; });
    CHECK((moving_average(lin, 5).values() - lin.values()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("dataset validation") {
    const Grid g = Grid::uniform(4);
    auto sample = [&](double x, std::size_t d) {
        return ObservationalSample{"s", x, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)), std::nullopt,
                                   Curve::constant(g, x)};
    };
    CHECK_THROWS_AS(Dataset({sample(1, 1)}), SchemaError);
    CHECK_THROWS_AS(Dataset({sample(1, 1), sample(1, 1)}), SchemaError);
    CHECK_THROWS_AS(Dataset({sample(1, 1), sample(0, 2)}), SchemaError);
    const Dataset ds({sample(1, 1), sample(0, 1), sample(1, 1)});
    CHECK(ds.is_binary_treatment());
    CHECK(ds.arm_indices(1) == std::vector<std::size_t>{0, 2});
    const Dataset cont({sample(1, 1), sample(0.5, 1)});
    CHECK_FALSE(cont.is_binary_treatment());
}

TEST_CASE("csv round trip") {
    for (bool curves : {false, true}) {
        const Dataset ds = small_dataset(curves);
        std::stringstream io;
        write_dataset_csv(ds, io);
        const Dataset back = read_dataset_csv(io);
        CHECK(back == ds);
        CHECK(back.has_covariate_curves() == curves);
    }
}

TEST_CASE("json round trip") {
    const Dataset ds = small_dataset(true);
    std::stringstream io;
    write_dataset_json(ds, io);
    CHECK(read_dataset_json(io) == ds);
}

TEST_CASE("csv header uses padded columns") {
    std::stringstream io;
    write_dataset_csv(small_dataset(true), io);
    std::string header;
    std::getline(io, header);
    CHECK(header == "id,treatment,v_1,v_2,y_0001,y_0002,y_0003,y_0004,y_0005,vc_0001,vc_0002,vc_0003,vc_0004");
}

TEST_CASE("csv schema errors carry the row") {
    SUBCASE("short row") {
        std::stringstream io("id,treatment,y_0001,y_0002,y_0003\na,1,0,0,0\nb,0,0,0\n");
        try {
            read_dataset_csv(io);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.row() == 2);
        }
    }
    SUBCASE("missing value") {
        std::stringstream io("id,treatment,y_0001,y_0002\na,1,0,\nb,0,0,0\n");
        CHECK_THROWS_AS(read_dataset_csv(io), SchemaError);
    }
    SUBCASE("bad header") {
        std::stringstream io("id,treatment,y_0002,y_0001\na,1,0,0\nb,0,0,0\n");
        CHECK_THROWS_AS(read_dataset_csv(io), SchemaError);
    }
    SUBCASE("nan rejected") {
        std::stringstream io("id,treatment,y_0001,y_0002\na,1,0,nan\nb,0,0,0\n");
        CHECK_THROWS_AS(read_dataset_csv(io), SchemaError);
    }
}

TEST_CASE("mixed treatment column loads as non-binary") {
    std::stringstream io("id,treatment,v_1,y_0001,y_0002\na,1,0.5,0,1\nb,0,0.1,0,1\nc,0.5,2,1,1\n");
    const Dataset ds = read_dataset_csv(io);
    const Eigen::VectorXd x = ds.treatments();
    const bool scan = (x.array() == 0.0 || x.array() == 1.0).all();
    CHECK(ds.is_binary_treatment() == scan);
    CHECK_FALSE(ds.is_binary_treatment());
}

TEST_CASE("load and save through files") {
    const Dataset ds = small_dataset(false);
    const auto dir = std::filesystem::temp_directory_path();
    for (const char* name : {"funcause_io_test.csv", "funcause_io_test.json"}) {
        const auto path = dir / name;
        save_dataset(ds, path);
        const Dataset back = load_dataset(path);
        const Eigen::MatrixXd diff = back.outcome_matrix() - ds.outcome_matrix();
        CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12);
        std::filesystem::remove(path);
    }
    CHECK_THROWS_AS(load_dataset(dir / "funcause_missing_file.csv"), SchemaError);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 12345.678}) CHECK(std::stod(format_double(v)) == v);
    CHECK(column_index(7, 100) == "0007");
    CHECK(column_index(7, 12345) == "00007");
}
