#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "pargate/evaluator.hpp"

using namespace pargate;

namespace {

std::array<int, 4> pat(const char* s) {
    std::array<int, 4> out{};
    for (int i = 0; i < 4; ++i)
        out[i] = s[i] == '+' ? 1 : (s[i] == '-' ? -1 : 0);
    return out;
}

InteractionSummary random_summary(std::mt19937_64& rng, double alpha_scale,
                                  double chi_noise,
                                  const std::array<double, 6>& ideals) {
    std::normal_distribution<double> dist(0.0, 1.0);
    InteractionSummary s;
    s.alphas = Eigen::MatrixXcd(4, 3);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 3; ++k)
            s.alphas(i, k) = alpha_scale * cplx(dist(rng), dist(rng));
    s.chi_ideals = ideals;
    for (int p = 0; p < 6; ++p) s.chis[p] = ideals[p] + chi_noise * dist(rng);
    return s;
}

const std::array<double, 6> kParallelIdeals = {pi / 4, 0, 0, 0, 0, pi / 4};
const std::array<double, 6> kGhzIdeals = {pi / 4, pi / 4, pi / 4,
                                          pi / 4, pi / 4, pi / 4};

}  // namespace

TEST_CASE("beta_of: identity with the log/coth temperature form") {
    CHECK(beta_of(0.0) == 1.0);
    // Independent evaluation of coth((1/2) ln(1 + 1/nbar)).
    auto coth_form = [](double nbar) {
        const double x = 0.5 * std::log(1.0 + 1.0 / nbar);
        return std::cosh(x) / std::sinh(x);
    };
    CHECK(beta_of(0.5) == Catch::Approx(coth_form(0.5)).epsilon(1e-14));
    CHECK(beta_of(0.5) == Catch::Approx(2.0).epsilon(1e-14));
    CHECK(beta_of(10.0) == Catch::Approx(coth_form(10.0)).epsilon(1e-14));
    CHECK(beta_of(10.0) == Catch::Approx(21.0).epsilon(1e-14));
    CHECK_THROWS_AS(beta_of(-0.1), ConfigError);
}

TEST_CASE("gamma: trivial sign patterns") {
    std::mt19937_64 rng(2);
    const InteractionSummary s = random_summary(rng, 0.1, 0.0, kParallelIdeals);
    const ThermalSpec thermal =
        ThermalSpec::from_nbar(Eigen::VectorXd::Constant(3, 0.2));
    CHECK(gamma_factor(s, thermal, {0, 0, 0, 0}) == 1.0);
    InteractionSummary closed = s;
    closed.alphas.setZero();
    for (const auto& p : full_gamma_patterns())
        CHECK(gamma_factor(closed, thermal, p) == 1.0);
}

TEST_CASE("gamma matches the truncated-Fock thermal displacement oracle") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::uniform_real_distribution<double> nb(0.0, 0.3);
    std::uniform_int_distribution<int> sign(-1, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const InteractionSummary s = random_summary(rng, 0.15, 0.0, kParallelIdeals);
        Eigen::VectorXd nbar(3);
        for (int k = 0; k < 3; ++k) nbar[k] = nb(rng);
        const std::array<int, 4> signs = {sign(rng), sign(rng), sign(rng), sign(rng)};
        const double got = gamma_factor(s, ThermalSpec::from_nbar(nbar), signs);
        double ref = 1.0;
        for (int k = 0; k < 3; ++k) {
            cplx disp = 0.0;
            for (int i = 0; i < 4; ++i) disp += double(signs[i]) * s.alphas(i, k);
            const int cutoff = int(40 * (nbar[k] + 1) + 10 * std::norm(2.0 * disp)) + 5;
            ref *= oracles::thermal_displacement_expectation(2.0 * disp, nbar[k],
                                                             cutoff);
        }
        CHECK(got == Catch::Approx(ref).margin(1e-6));
    }
}

TEST_CASE("gamma decreases in beta for fixed nonzero displacement") {
    std::mt19937_64 rng(4);
    const InteractionSummary s = random_summary(rng, 0.1, 0.0, kParallelIdeals);
    double prev = 1.0;
    for (double nbar : {0.0, 0.1, 0.5, 2.0}) {
        const double g = gamma_factor(
            s, ThermalSpec::from_nbar(Eigen::VectorXd::Constant(3, nbar)),
            {1, 1, -1, 1});
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("fidelities are exactly 1 at the ideal points") {
    InteractionSummary s;
    s.alphas = Eigen::MatrixXcd::Zero(4, 5);
    const ThermalSpec thermal =
        ThermalSpec::from_nbar(Eigen::VectorXd::Constant(5, 0.1));
    s.chi_ideals = kParallelIdeals;
    s.chis = kParallelIdeals;
    CHECK(std::abs(parallel_fidelity(s, thermal) - 1.0) < 1e-12);
    s.chi_ideals = kGhzIdeals;
    s.chis = kGhzIdeals;
    CHECK(std::abs(ghz_fidelity(s, thermal) - 1.0) < 1e-12);
}

TEST_CASE("small single-pair detuning of chi gives cos^2(delta)") {
    InteractionSummary s;
    s.alphas = Eigen::MatrixXcd::Zero(4, 5);
    s.chi_ideals = kParallelIdeals;
    s.chis = kParallelIdeals;
    const ThermalSpec thermal =
        ThermalSpec::from_nbar(Eigen::VectorXd::Constant(5, 0.1));
    for (double delta : {1e-3, 1e-2, 0.3}) {
        s.chis[0] = pi / 4 + delta;
        const double f = parallel_fidelity(s, thermal);
        CHECK(f == Catch::Approx(std::cos(delta) * std::cos(delta)).epsilon(1e-12));
    }
}

TEST_CASE("uniform GHZ chi shift evaluates consistently with the oracle") {
    InteractionSummary s;
    s.alphas = Eigen::MatrixXcd::Zero(4, 3);
    s.chi_ideals = kGhzIdeals;
    const double delta = 0.01;
    for (int p = 0; p < 6; ++p) s.chis[p] = pi / 4 + delta;
    const Eigen::VectorXd nbar = Eigen::VectorXd::Constant(3, 0.1);
    const double got = ghz_fidelity(s, ThermalSpec::from_nbar(nbar));
    const double ref =
        oracles::exact_fidelity(s.alphas, s.chis, s.chi_ideals, nbar, 12);
    CHECK(got == Catch::Approx(ref).margin(1e-10));
}

TEST_CASE("fidelities match the density-matrix oracle on random draws") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> nb(0.0, 0.3);
    for (int trial = 0; trial < 4; ++trial) {
        Eigen::VectorXd nbar(3);
        for (int k = 0; k < 3; ++k) nbar[k] = nb(rng);
        const ThermalSpec thermal = ThermalSpec::from_nbar(nbar);

        InteractionSummary s = random_summary(rng, 0.02, 0.05, kParallelIdeals);
        const double got = parallel_fidelity(s, thermal);
        const double ref =
            oracles::exact_fidelity(s.alphas, s.chis, s.chi_ideals, nbar, 30);
        CHECK(got == Catch::Approx(ref).margin(1e-4));

        InteractionSummary g = random_summary(rng, 0.02, 0.05, kGhzIdeals);
        const double got_g = ghz_fidelity(g, thermal);
        const double ref_g =
            oracles::exact_fidelity(g.alphas, g.chis, g.chi_ideals, nbar, 30);
        CHECK(got_g == Catch::Approx(ref_g).margin(1e-4));
    }
}

TEST_CASE("fidelity stays in range and respects pair-relabel symmetry") {
    std::mt19937_64 rng(21);
    const ThermalSpec thermal =
        ThermalSpec::from_nbar(Eigen::VectorXd::Constant(3, 0.15));
    for (int trial = 0; trial < 20; ++trial) {
        InteractionSummary s = random_summary(rng, 0.1, 0.2, kParallelIdeals);
        const double f = parallel_fidelity(s, thermal);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0 + 1e-12);
        // Relabel (i,j,m,n) -> (m,n,i,j): slots (ij,im,in,jm,jn,mn) pull
        // back from old slots (mn,im,jm,in,jn,ij).
        InteractionSummary t = s;
        t.alphas.row(0) = s.alphas.row(2);
        t.alphas.row(1) = s.alphas.row(3);
        t.alphas.row(2) = s.alphas.row(0);
        t.alphas.row(3) = s.alphas.row(1);
        const std::array<int, 6> perm = {5, 1, 3, 2, 4, 0};
        for (int p = 0; p < 6; ++p) {
            t.chis[p] = s.chis[perm[p]];
            t.chi_ideals[p] = s.chi_ideals[perm[p]];
        }
        CHECK(parallel_fidelity(t, thermal) == Catch::Approx(f).epsilon(1e-12));
    }
}

TEST_CASE("mode preconditions on the ideal vectors are enforced") {
    InteractionSummary s;
    s.alphas = Eigen::MatrixXcd::Zero(4, 2);
    s.chi_ideals = {pi / 4, 0.1, 0, 0, 0, pi / 4};
    s.chis = s.chi_ideals;
    const ThermalSpec thermal =
        ThermalSpec::from_nbar(Eigen::VectorXd::Constant(2, 0.1));
    CHECK_THROWS_AS(parallel_fidelity(s, thermal), ConfigError);
    CHECK_THROWS_AS(ghz_fidelity(s, thermal), ConfigError);
}

TEST_CASE("generated term table reproduces the frozen closed-form fixture") {
    // Frozen transcription of the grouped cosine terms: (pattern a,
    // pattern b, coefficients over slots (ij, im, in, jm, jn, mn)).
    struct Fixture {
        const char *a, *b;
        std::array<int, 6> c;
    };
    const std::vector<Fixture> fixture = {
        {"0+--", "+000", {1, -1, -1, 0, 0, 0}}, {"0++-", "+000", {1, 1, -1, 0, 0, 0}},
        {"0+-+", "+000", {1, -1, 1, 0, 0, 0}},  {"0+++", "+000", {1, 1, 1, 0, 0, 0}},
        {"0+00", "+0--", {1, 0, 0, -1, -1, 0}}, {"0+00", "+0+-", {1, 0, 0, 1, -1, 0}},
        {"0+00", "+0-+", {1, 0, 0, -1, 1, 0}},  {"0+00", "+0++", {1, 0, 0, 1, 1, 0}},
        {"00+0", "+-0+", {0, 1, 0, -1, 0, 1}},  {"00+0", "++0+", {0, 1, 0, 1, 0, 1}},
        {"00+0", "+-0-", {0, 1, 0, -1, 0, -1}}, {"00+0", "++0-", {0, 1, 0, 1, 0, -1}},
        {"000+", "+-+0", {0, 0, 1, 0, -1, 1}},  {"000+", "+++0", {0, 0, 1, 0, 1, 1}},
        {"000+", "+--0", {0, 0, 1, 0, -1, -1}}, {"000+", "++-0", {0, 0, 1, 0, 1, -1}},
        {"00++", "+-00", {0, 1, 1, -1, -1, 0}}, {"00+-", "++00", {0, 1, -1, 1, -1, 0}},
        {"00+-", "+-00", {0, 1, -1, -1, 1, 0}}, {"00++", "++00", {0, 1, 1, 1, 1, 0}},
        {"0+0-", "+0-0", {1, 0, -1, -1, 0, 1}}, {"0+0+", "+0+0", {1, 0, 1, 1, 0, 1}},
        {"0+0+", "+0-0", {1, 0, 1, -1, 0, -1}}, {"0+0-", "+0+0", {1, 0, -1, 1, 0, -1}},
        {"0+-0", "+00-", {1, -1, 0, 0, -1, 1}}, {"0++0", "+00+", {1, 1, 0, 0, 1, 1}},
        {"0++0", "+00-", {1, 1, 0, 0, -1, -1}}, {"0+-0", "+00+", {1, -1, 0, 0, 1, -1}},
    };
    auto table = fidelity_term_table();
    REQUIRE(table.size() == 28);

    auto key = [](const std::array<int, 4>& a, const std::array<int, 4>& b,
                  const std::array<int, 6>& c) {
        std::array<int, 4> lo = std::min(a, b), hi = std::max(a, b);
        std::array<int, 6> cc = c;
        for (int x : cc) {
            if (x > 0) break;
            if (x < 0) {
                for (auto& e : cc) e = -e;
                break;
            }
        }
        std::string k;
        for (int v : lo) k += char('0' + v + 1);
        for (int v : hi) k += char('0' + v + 1);
        for (int v : cc) k += char('0' + v + 1);
        return k;
    };
    std::vector<std::string> got, want;
    for (const auto& t : table) got.push_back(key(t.gamma_a, t.gamma_b, t.coeffs));
    for (const auto& f : fixture) want.push_back(key(pat(f.a), pat(f.b), f.c));
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);

    // Table-based evaluation agrees with the evaluator's direct sum,
    // confirming the grouped form (weights 8 + 8 + 2*28*2 = 128 at ideal).
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const InteractionSummary s =
            random_summary(rng, 0.08, 0.15, kParallelIdeals);
        const ThermalSpec thermal =
            ThermalSpec::from_nbar(Eigen::VectorXd::Constant(3, 0.12));
        std::array<double, 6> d{};
        for (int p = 0; p < 6; ++p) d[p] = s.chis[p] - s.chi_ideals[p];
        double total = 8.0;
        for (const auto& fp : full_gamma_patterns())
            total += gamma_factor(s, thermal, fp);
        for (const auto& t : table) {
            double arg = 0.0;
            for (int p = 0; p < 6; ++p) arg += t.coeffs[p] * d[p];
            total += 2.0 *
                     (gamma_factor(s, thermal, t.gamma_a) +
                      gamma_factor(s, thermal, t.gamma_b)) *
                     std::cos(2.0 * arg);
        }
        CHECK(total / 128.0 ==
              Catch::Approx(parallel_fidelity(s, thermal)).epsilon(1e-12));
    }
}
