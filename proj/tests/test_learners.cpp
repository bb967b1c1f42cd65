#include <doctest.h>

#include <cmath>

#include "crossfit/learners.hpp"
#include "crossfit/rng.hpp"
#include "support/helpers.hpp"

using namespace crossfit;

namespace {

// Independent dense solve: Gaussian elimination with partial pivoting. Used
// as the oracle route against the Cholesky-based implementation.
std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double v = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) v -= a[ri * n + c] * x[c];
        x[ri] = v / a[ri * n + ri];
    }
    return x;
}

Dataset random_regression_data(std::size_t n, Rng& rng) {
    std::vector<double> x1(n), x2(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x1[i] = rng.next_normal();
        x2[i] = rng.next_normal();
        y[i] = 1.5 * x1[i] - 0.5 * x2[i] + 0.3 + 0.1 * rng.next_normal();
    }
    return Dataset::from_columns({{"y", y}, {"x1", x1}, {"x2", x2}});
}

} // namespace

TEST_CASE("ols recovers an exact linear relationship") {
    const Dataset d = Dataset::from_columns({{"y", {2, 4, 6}}, {"x", {1, 2, 3}}});
    const LinearModel m = ols_fit(d, "y", {"x"});
    CHECK(m.coefficients[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(m.intercept == doctest::Approx(0.0).scale(1).epsilon(1e-10));
}

TEST_CASE("ols on a constant response") {
    const Dataset d = Dataset::from_columns({{"y", {5, 5, 5, 5}}, {"x", {1, 2, 3, 4}}});
    const LinearModel m = ols_fit(d, "y", {"x"});
    CHECK(m.intercept == doctest::Approx(5.0));
    CHECK(m.coefficients[0] == doctest::Approx(0.0).scale(1));
    CHECK_THROWS(ols_fit(d.select_rows({}), "y", {"x"}));
}

TEST_CASE("duplicated columns fall back to ridge jitter with equal predictions") {
    Rng rng(3);
    const Dataset base = random_regression_data(40, rng);
    const Dataset dup = base.with_column("x1b", base.column("x1"));

    const LinearModel clean = ols_fit(base, "y", {"x1", "x2"});
    const LinearModel degenerate = ols_fit(dup, "y", {"x1", "x1b", "x2"});
    CHECK(degenerate.rank_deficient);

    const auto p_clean = clean.predict(base);
    const auto p_dup = degenerate.predict(dup);
    for (std::size_t i = 0; i < p_clean.size(); ++i) {
        CHECK(p_dup[i] == doctest::Approx(p_clean[i]).epsilon(1e-6));
    }
}

TEST_CASE("ridge with lambda 0 equals ols") {
    Rng rng(4);
    const Dataset d = random_regression_data(30, rng);
    const LinearModel a = ols_fit(d, "y", {"x1", "x2"});
    const LinearModel b = ridge_fit(d, "y", {"x1", "x2"}, 0.0);
    CHECK(a.intercept == doctest::Approx(b.intercept).epsilon(1e-10));
    for (std::size_t j = 0; j < a.coefficients.size(); ++j) {
        CHECK(a.coefficients[j] == doctest::Approx(b.coefficients[j]).epsilon(1e-10));
    }
    CHECK_THROWS(ridge_fit(d, "y", {"x1"}, -1.0));
}

TEST_CASE("large lambda shrinks coefficients to zero and intercept to the mean") {
    Rng rng(5);
    const Dataset d = random_regression_data(30, rng);
    const LinearModel m = ridge_fit(d, "y", {"x1", "x2"}, 1e12);
    for (double c : m.coefficients) CHECK(std::abs(c) < 1e-6);
    double mean = 0.0;
    for (double v : d.column("y")) mean += v;
    mean /= static_cast<double>(d.n_rows());
    CHECK(m.intercept == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("ridge matches a direct dense-solve oracle on a 5-point fixture") {
    const Dataset d = Dataset::from_columns(
        {{"y", {1.0, 2.5, 0.5, 4.0, 3.0}}, {"x1", {0.0, 1.0, -1.0, 2.0, 1.5}}, {"x2", {1.0, 0.0, 0.5, -0.5, 2.0}}});
    const double lambda = 1.0;
    const LinearModel m = ridge_fit(d, "y", {"x1", "x2"}, lambda);

    // centered normal equations solved by an independent route
    const auto& y = d.column("y");
    const auto& x1 = d.column("x1");
    const auto& x2 = d.column("x2");
    const std::size_t n = y.size();
    double ym = 0, m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ym += y[i];
        m1 += x1[i];
        m2 += x2[i];
    }
    ym /= n;
    m1 /= n;
    m2 /= n;
    double s11 = lambda, s12 = 0, s22 = lambda, r1 = 0, r2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c1 = x1[i] - m1, c2 = x2[i] - m2, cy = y[i] - ym;
        s11 += c1 * c1;
        s12 += c1 * c2;
        s22 += c2 * c2;
        r1 += c1 * cy;
        r2 += c2 * cy;
    }
    const auto beta = gauss_solve({s11, s12, s12, s22}, {r1, r2}, 2);
    CHECK(m.coefficients[0] == doctest::Approx(beta[0]).epsilon(1e-8));
    CHECK(m.coefficients[1] == doctest::Approx(beta[1]).epsilon(1e-8));
    CHECK(m.intercept == doctest::Approx(ym - beta[0] * m1 - beta[1] * m2).epsilon(1e-8));
}

TEST_CASE("logistic fit on mirrored data has zero intercept") {
    // symmetric: (x, 1) and (-x, 0) pairs
    std::vector<double> x, y;
    for (double v : {0.5, 1.0, 2.0, 3.0}) {
        x.push_back(v);
        y.push_back(1);
        x.push_back(-v);
        y.push_back(0);
    }
    const Dataset d = Dataset::from_columns({{"y", y}, {"x", x}});
    const LogisticModel m = logistic_fit(d, "y", {"x"});
    CHECK(m.converged);
    CHECK(std::abs(m.intercept) < 1e-6);
    CHECK(m.coefficients[0] > 0);
}

TEST_CASE("all-ones labels match the one-parameter penalized logit oracle") {
    const std::size_t n = 12;
    const Dataset d = Dataset::from_columns({{"y", std::vector<double>(n, 1.0)}});
    LogisticOptions opts;
    const LogisticModel m = logistic_fit(d, "y", {}, opts);
    CHECK(m.converged);

    // oracle: maximize n*log(sigmoid(b)) - eps/2 * b^2 by 1-d Newton
    double b = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double p = 1.0 / (1.0 + std::exp(-b));
        const double grad = n * (1.0 - p) - opts.ridge_eps * b;
        const double hess = n * p * (1.0 - p) + opts.ridge_eps;
        const double step = grad / hess;
        b += step;
        if (std::abs(step) < 1e-12) break;
    }
    CHECK(m.intercept == doctest::Approx(b).epsilon(1e-6));
    const auto probs = m.predict(d);
    for (double p : probs) CHECK(p > 0.9);
}

TEST_CASE("separable data stays finite and ordered") {
    const Dataset d = Dataset::from_columns({{"y", {0, 1}}, {"x", {-1, 1}}});
    const LogisticModel m = logistic_fit(d, "y", {"x"});
    CHECK(std::isfinite(m.coefficients[0]));
    const Dataset probe = Dataset::from_columns({{"x", {-1, 1}}});
    const auto p = m.predict(probe);
    CHECK(p[0] < 0.5);
    CHECK(p[1] > 0.5);
    for (double v : p) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("logistic rejects non-binary responses") {
    const Dataset d = Dataset::from_columns({{"y", {0, 2}}, {"x", {1, 2}}});
    CHECK_THROWS(logistic_fit(d, "y", {"x"}));
}

TEST_CASE("logistic predictions are monotone in the linear index") {
    Rng rng(6);
    std::vector<double> x(60), y(60);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.next_normal();
        y[i] = rng.next_double() < 1.0 / (1.0 + std::exp(-1.3 * x[i])) ? 1.0 : 0.0;
    }
    const Dataset d = Dataset::from_columns({{"y", y}, {"x", x}});
    const LogisticModel m = logistic_fit(d, "y", {"x"});
    const Dataset grid = Dataset::from_columns({{"x", {-2, -1, 0, 1, 2}}});
    const auto p = m.predict(grid);
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] >= p[i - 1]);
}

TEST_CASE("constant learner ignores its inputs") {
    const LearnerFns fns = constant_learner(7.0);
    const Dataset d = Dataset::from_columns({{"x", {1, 2, 3, 4}}});
    const Model m = fns.fit(d, {});
    CHECK(fns.predict(m, d, {}).num() == std::vector<double>{7, 7, 7, 7});
    CHECK(fns.predict(m, d.select_rows({}), {}).num().empty());
}

TEST_CASE("trace learner encodes training and prediction folds") {
    const Dataset d = crossfit::testing::fold_labelled_data(9, 3);
    const LearnerFns fns = trace_learner("fold");

    std::vector<std::size_t> train_rows, eval_rows;
    for (std::size_t i = 0; i < 9; ++i) {
        const int f = static_cast<int>(i % 3);
        if (f == 1 || f == 2) train_rows.push_back(i);
        if (f == 0) eval_rows.push_back(i);
    }
    const Model m = fns.fit(d.select_rows(train_rows), {});
    CHECK(std::any_cast<std::string>(m) == "T1,2");

    const PredictionVector out = fns.predict(m, d.select_rows(eval_rows), {});
    for (const auto& token : out.tokens()) CHECK(token == "T1,2|P0");

    // dependency traces surface upstream training folds
    PredMap deps;
    deps["up"] = PredictionVector::text(
        std::vector<std::string>(train_rows.size(), "T0|P1"));
    const Model chained = fns.fit(d.select_rows(train_rows), deps);
    CHECK(std::any_cast<std::string>(chained) == "T0,1,2");

    const TraceToken parsed = parse_trace_token("T0,2|P4");
    CHECK(parsed.train_folds == std::set<int>{0, 2});
    CHECK(parsed.pred_fold == 4);
    CHECK_THROWS(parse_trace_token("bogus"));
}

TEST_CASE("learner registry builds each known learner") {
    using nlohmann::json;
    const Dataset d = Dataset::from_columns({{"y", {1, 2, 3, 4}}, {"x", {0, 1, 2, 3}}});

    auto ols = make_learner("ols", json{{"y", "y"}, {"x", {"x"}}});
    const Model om = ols.fit(d, {});
    CHECK(ols.predict(om, d, {}).num()[0] == doctest::Approx(1.0));

    auto ridge = make_learner("ridge", json{{"y", "y"}, {"x", {"x"}}, {"lambda", 0.5}});
    CHECK_NOTHROW(ridge.fit(d, {}));

    const Dataset bin = Dataset::from_columns({{"y", {0, 0, 1, 1}}, {"x", {0, 1, 2, 3}}});
    auto logit = make_learner("logistic", json{{"y", "y"}, {"x", {"x"}}, {"max_iter", 25}});
    CHECK_NOTHROW(logit.fit(bin, {}));

    auto constant = make_learner("constant", json{{"value", 3.5}});
    CHECK(constant.predict(constant.fit(d, {}), d, {}).num()[0] == doctest::Approx(3.5));

    CHECK_NOTHROW(make_learner("trace", json::object()));
    CHECK_THROWS_AS(make_learner("forest", json::object()), SpecError);
}

TEST_CASE("dep_features feed dependency predictions into the design") {
    // downstream ols uses the dependency output as its only regressor
    const LearnerFns fns = ols_learner("y", {}, {"up"});
    const Dataset d = Dataset::from_columns({{"y", {2, 4, 6}}});
    PredMap deps;
    deps["up"] = PredictionVector::numeric({1, 2, 3});
    const Model m = fns.fit(d, deps);
    const auto out = fns.predict(m, d, deps).num();
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(2.0 * (i + 1)).epsilon(1e-9));
    CHECK_THROWS(fns.fit(d, {})); // missing dependency
}
