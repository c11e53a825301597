#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "lineamorph/cohortstats.hpp"
#include "stat_oracles.hpp"

using namespace lineamorph;
using namespace lmtest;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidConfig;
}

std::vector<double> gaussian(std::mt19937_64& rng, int n, double mean = 0, double sd = 1) {
    std::normal_distribution<double> d(mean, sd);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = d(rng);
    return x;
}

SubjectRecord subject(std::string id, double age, Sex sex, double bmi) {
    SubjectRecord s;
    s.id = std::move(id);
    s.age_years = age;
    s.sex = sex;
    s.bmi_kg_m2 = bmi;
    return s;
}

}  // namespace

// --- summaries --------------------------------------------------------------

TEST(Summarize, SmallCases) {
    const Summary one = summarize(std::vector<double>{5});
    EXPECT_EQ(one.n, 1u);
    EXPECT_DOUBLE_EQ(one.mean, 5);
    EXPECT_FALSE(one.sd);
    EXPECT_DOUBLE_EQ(one.min, 5);
    EXPECT_DOUBLE_EQ(one.max, 5);
    const Summary three = summarize(std::vector<double>{1, 2, 3});
    EXPECT_DOUBLE_EQ(three.mean, 2);
    ASSERT_TRUE(three.sd);
    EXPECT_DOUBLE_EQ(*three.sd, 1);
    EXPECT_DOUBLE_EQ(three.min, 1);
    EXPECT_DOUBLE_EQ(three.max, 3);
    EXPECT_EQ(code_of([] { summarize(std::vector<double>{}); }), ErrorCode::EmptySample);
}

TEST(Summarize, TwoPassOracle) {
    std::mt19937_64 rng(2024);
    const auto x = gaussian(rng, 1000, 375, 36);
    double mean = 0;
    for (double v : x) mean += v;
    mean /= 1000;
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const Summary s = summarize(x);
    EXPECT_NEAR(s.mean, mean, 1e-12 * std::abs(mean));
    EXPECT_NEAR(*s.sd, std::sqrt(ss / 999), 1e-12 * std::sqrt(ss / 999));
    EXPECT_EQ(s.min, *std::min_element(x.begin(), x.end()));
    EXPECT_EQ(s.max, *std::max_element(x.begin(), x.end()));
}

// --- Shapiro-Wilk ------------------------------------------------------------

TEST(ShapiroWilk, ThreeEquallySpacedIsOne) {
    const TestResult r = shapiro_wilk(std::vector<double>{1, 2, 3});
    EXPECT_DOUBLE_EQ(r.statistic, 1.0);
    EXPECT_EQ(r.method, TestMethod::ShapiroWilk);
    EXPECT_NEAR(r.p_value, 1.0, 1e-9);
}

TEST(ShapiroWilk, Errors) {
    EXPECT_EQ(code_of([] { shapiro_wilk(std::vector<double>{5, 5, 5, 5}); }), ErrorCode::ZeroVariance);
    EXPECT_EQ(code_of([] { shapiro_wilk(std::vector<double>{1, 2}); }), ErrorCode::SampleTooSmall);
}

TEST(ShapiroWilk, ReferenceFixtures) {
    for (const auto& f : sw_fixtures()) {
        const TestResult r = shapiro_wilk(f.x);
        EXPECT_NEAR(r.statistic, f.w, 1e-3) << "n=" << f.x.size();
        EXPECT_NEAR(r.p_value, f.p, 1e-3) << "n=" << f.x.size();
    }
}

TEST(ShapiroWilk, LocationScaleInvariant) {
    const auto& x = sw_fixtures()[0].x;
    std::vector<double> y;
    for (double v : x) y.push_back(-3.5 * v + 100);
    EXPECT_NEAR(shapiro_wilk(x).statistic, shapiro_wilk(y).statistic, 1e-12);
}

// --- t test -------------------------------------------------------------------

TEST(TTest, Examples) {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const TestResult same = t_test(a, a);
    EXPECT_DOUBLE_EQ(same.statistic, 0.0);
    EXPECT_DOUBLE_EQ(same.p_value, 1.0);
    const TestResult r = t_test(a, b);
    EXPECT_NEAR(r.statistic, -3.674, 1e-3);
    EXPECT_NEAR(r.p_value, 0.0213, 1e-3);
    ASSERT_EQ(r.df.size(), 1u);
    EXPECT_DOUBLE_EQ(r.df[0], 4);
    EXPECT_TRUE(r.significant);
    EXPECT_FALSE(r.welch);
    EXPECT_EQ(code_of([&] { t_test(std::vector<double>{1}, b); }), ErrorCode::SampleTooSmall);
}

TEST(TTest, WelchWhenVariancesDiffer) {
    const std::vector<double> a{1.1, 2.3, 1.9, 2.2, 1.7, 2.0, 1.8}, b{3.0, 9.5, -2.0, 7.1, 0.4, 12.2, 5.5};
    const TestResult r = t_test(a, b);
    EXPECT_NEAR(r.statistic, -1.705883135708026, 1e-9);
    EXPECT_NEAR(r.p_value, 0.1137540218950657, 1e-9);
    ASSERT_TRUE(r.welch);
    EXPECT_NEAR(r.welch->df, 6.074551048970076, 1e-9);
    EXPECT_NEAR(r.welch->p_value, 0.13829855737336766, 1e-9);
}

// --- Mann-Whitney ------------------------------------------------------------

TEST(MannWhitney, Examples) {
    const TestResult r = mann_whitney(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
    EXPECT_DOUBLE_EQ(r.statistic, 0.0);
    EXPECT_TRUE(r.exact);
    EXPECT_DOUBLE_EQ(r.p_value, 0.1);
    ASSERT_TRUE(r.p_asymptotic);

    const std::vector<double> a{1.5, 2.5, 3.5, 4.5};
    const TestResult same = mann_whitney(a, a);
    EXPECT_DOUBLE_EQ(same.statistic, 8.0);
    EXPECT_DOUBLE_EQ(same.p_value, 1.0);
    EXPECT_EQ(code_of([&] { mann_whitney(std::vector<double>{}, a); }), ErrorCode::EmptySample);
}

TEST(MannWhitney, ExactMatchesEnumeration) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const int na = 1 + static_cast<int>(rng() % 8), nb = 1 + static_cast<int>(rng() % (10 - na));
        const auto a = gaussian(rng, na, trial % 3 * 0.7), b = gaussian(rng, nb);
        const TestResult r = mann_whitney(a, b);
        ASSERT_TRUE(r.exact);
        EXPECT_DOUBLE_EQ(r.p_value, mw_enumeration_p(a, b)) << na << "+" << nb;
    }
}

TEST(MannWhitney, FiftyPointNormalApproximation) {
    std::mt19937_64 rng(8);
    const auto a = gaussian(rng, 50, 0.3), b = gaussian(rng, 50);
    const TestResult r = mann_whitney(a, b);
    EXPECT_FALSE(r.exact);
    const auto dist = u_distribution(50, 50);
    double total = 0;
    for (double c : dist) total += c;
    const auto u = static_cast<std::size_t>(r.statistic);
    double le = 0, ge = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (i <= u) le += dist[i];
        if (i >= u) ge += dist[i];
    }
    const double exact = std::min(1.0, 2 * std::min(le, ge) / total);
    EXPECT_NEAR(r.p_value, exact, 0.005);
}

TEST(MannWhitney, EightPerGroupAsymptoticAgrees) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = gaussian(rng, 8, 0.1 * trial), b = gaussian(rng, 8);
        const TestResult r = mann_whitney(a, b);
        ASSERT_TRUE(r.exact);
        EXPECT_NEAR(r.p_value, *r.p_asymptotic, 0.05);
    }
}

TEST(MannWhitney, TiesUseNormalApproximation) {
    const TestResult r = mann_whitney(std::vector<double>{1, 2, 2, 3}, std::vector<double>{2, 3, 4, 4});
    EXPECT_FALSE(r.exact);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
}

// --- ANOVA -------------------------------------------------------------------

TEST(Anova, Examples) {
    const TestResult r = anova({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
    EXPECT_NEAR(r.statistic, 3.0, 1e-12);
    EXPECT_NEAR(r.p_value, 0.125, 1e-3);
    EXPECT_EQ(r.df, (std::vector<double>{2, 6}));
    const TestResult z = anova({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    EXPECT_DOUBLE_EQ(z.statistic, 0.0);
    EXPECT_DOUBLE_EQ(z.p_value, 1.0);
    EXPECT_EQ(code_of([] { anova({{1, 2, 3}, {4}}); }), ErrorCode::SampleTooSmall);
    EXPECT_EQ(code_of([] { anova({{1, 2, 3}}); }), ErrorCode::TooFewGroups);
}

TEST(Anova, TwoGroupsEqualsTSquared) {
    std::mt19937_64 rng(12);
    const auto a = gaussian(rng, 9, 1), b = gaussian(rng, 13);
    const TestResult f = anova({a, b});
    const TestResult t = t_test(a, b);
    EXPECT_NEAR(f.statistic, t.statistic * t.statistic, 1e-9);
    EXPECT_NEAR(f.p_value, t.p_value, 1e-9);
}

// --- Kruskal-Wallis ------------------------------------------------------------

TEST(KruskalWallis, Examples) {
    const TestResult r = kruskal_wallis({{1, 2}, {3, 4}, {5, 6}});
    EXPECT_NEAR(r.statistic, 4.571, 1e-3);
    ASSERT_TRUE(r.p_asymptotic);
    EXPECT_NEAR(*r.p_asymptotic, 0.102, 1e-3);
    EXPECT_TRUE(r.exact);
    EXPECT_NEAR(r.p_value, 6.0 / 90.0, 1e-12);

    const TestResult flat = kruskal_wallis({{5, 5}, {5, 5}});
    EXPECT_DOUBLE_EQ(flat.statistic, 0.0);
    EXPECT_DOUBLE_EQ(flat.p_value, 1.0);
    EXPECT_EQ(code_of([] { kruskal_wallis({{1, 2, 3}}); }), ErrorCode::TooFewGroups);
}

TEST(KruskalWallis, ExactMatchesEnumeration) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        const int k = 2 + trial % 3;
        std::vector<std::vector<double>> g(static_cast<std::size_t>(k));
        int n = 0;
        for (auto& x : g) {
            const int m = 1 + static_cast<int>(rng() % 3);
            x = gaussian(rng, m, 0.2 * trial);
            n += m;
        }
        if (n < 3 || n > 10) continue;
        const TestResult r = kruskal_wallis(g);
        ASSERT_TRUE(r.exact);
        EXPECT_DOUBLE_EQ(r.p_value, kw_enumeration_p(g)) << "trial " << trial;
    }
}

TEST(KruskalWallis, NineThreeGroupChiSquareNearExact) {
    const std::vector<std::vector<double>> g{{2.9, 3.0, 2.5}, {3.8, 2.7, 4.0}, {2.8, 3.4, 3.7}};
    const TestResult r = kruskal_wallis(g);
    ASSERT_TRUE(r.exact);
    EXPECT_DOUBLE_EQ(r.p_value, kw_enumeration_p(g));
    EXPECT_NEAR(*r.p_asymptotic, r.p_value, 0.05);
}

TEST(KruskalWallis, TwoGroupsMatchesMannWhitneyAsymptotic) {
    std::mt19937_64 rng(6);
    const auto a = gaussian(rng, 15), b = gaussian(rng, 17, 0.5);
    const TestResult k = kruskal_wallis({a, b});
    EXPECT_FALSE(k.exact);
    // H equals the squared z of the uncorrected rank-sum statistic
    double u = 0;
    for (double x : a)
        for (double y : b) u += x > y;
    const double mu = 15 * 17 / 2.0, sd = std::sqrt(15 * 17 * 33 / 12.0);
    EXPECT_NEAR(k.statistic, std::pow((u - mu) / sd, 2), 1e-9);
}

// --- rank invariance -------------------------------------------------------------

TEST(RankTests, MonotoneTransformInvariant) {
    std::mt19937_64 rng(40);
    auto tx = [](std::vector<double> v) {
        for (auto& x : v) x = std::exp(2 * x) + 3;
        return v;
    };
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = gaussian(rng, 6 + trial), b = gaussian(rng, 9, 0.4), c = gaussian(rng, 4, -0.2);
        const TestResult m1 = mann_whitney(a, b), m2 = mann_whitney(tx(a), tx(b));
        EXPECT_EQ(m1.statistic, m2.statistic);
        EXPECT_EQ(m1.p_value, m2.p_value);
        const TestResult k1 = kruskal_wallis({a, b, c}), k2 = kruskal_wallis({tx(a), tx(b), tx(c)});
        EXPECT_EQ(k1.statistic, k2.statistic);
        EXPECT_EQ(k1.p_value, k2.p_value);
    }
}

TEST(AllTests, PValuesInUnitIntervalAndSignificanceRule) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = gaussian(rng, 3 + trial % 20, 0.05 * trial), b = gaussian(rng, 4 + trial % 7);
        for (const TestResult& r : {t_test(a, b), mann_whitney(a, b), anova({a, b, a}), kruskal_wallis({a, b}),
                                    shapiro_wilk(a)}) {
            EXPECT_GE(r.p_value, 0.0);
            EXPECT_LE(r.p_value, 1.0);
            EXPECT_EQ(r.significant, r.p_value < kSignificanceLevel);
        }
    }
}

// --- Pearson ------------------------------------------------------------------

TEST(Pearson, Examples) {
    std::vector<std::vector<std::optional<double>>> rows;
    const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
    for (int i = 0; i < 4; ++i) rows.push_back({x[i], 2 * x[i], -x[i], y[i]});
    const CorrelationMatrix m = pearson_matrix({"x", "2x", "-x", "y"}, rows);
    EXPECT_NEAR(m.r[0][1], 1.0, 1e-12);
    EXPECT_NEAR(m.r[0][2], -1.0, 1e-12);
    EXPECT_NEAR(m.r[0][3], 0.8, 1e-12);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(m.r[i][i], 1.0);
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_EQ(m.r[i][j], m.r[j][i]);
            EXPECT_LE(std::abs(m.r[i][j]), 1.0);
        }
    }
}

TEST(Pearson, PairwiseDeletionAndConstantFlag) {
    std::vector<std::vector<std::optional<double>>> rows = {
        {1.0, 7.0, 2.0}, {2.0, 7.0, std::nullopt}, {3.0, 7.0, 5.0}, {4.0, 7.0, 3.0}, {std::nullopt, 7.0, 9.0}};
    const CorrelationMatrix m = pearson_matrix({"a", "const", "b"}, rows);
    EXPECT_EQ(m.n[0][2], 3u);
    EXPECT_EQ(m.n[0][1], 4u);
    EXPECT_FALSE(m.defined[0][1]);
    EXPECT_TRUE(m.defined[0][2]);
    EXPECT_FALSE(std::isnan(m.r[0][1]));
    // complete cases (1,2), (3,5), (4,3)
    const double mx = 8 / 3.0, my = 10 / 3.0;
    const double sxy = (1 - mx) * (2 - my) + (3 - mx) * (5 - my) + (4 - mx) * (3 - my);
    const double sxx = (1 - mx) * (1 - mx) + (3 - mx) * (3 - mx) + (4 - mx) * (4 - mx);
    const double syy = (2 - my) * (2 - my) + (5 - my) * (5 - my) + (3 - my) * (3 - my);
    EXPECT_NEAR(m.r[0][2], sxy / std::sqrt(sxx * syy), 1e-12);
}

TEST(Pearson, AffineInvariance) {
    std::mt19937_64 rng(3);
    std::vector<std::vector<std::optional<double>>> rows, scaled;
    for (int i = 0; i < 30; ++i) {
        const auto v = gaussian(rng, 3);
        rows.push_back({v[0], v[0] + v[1], v[2]});
        scaled.push_back({-4.0 * v[0] + 1.0, v[0] + v[1], 0.5 * v[2] - 7});
    }
    const auto a = pearson_matrix({"p", "q", "r"}, rows), b = pearson_matrix({"p", "q", "r"}, scaled);
    EXPECT_NEAR(a.r[0][1], -b.r[0][1], 1e-12);
    EXPECT_NEAR(a.r[1][2], b.r[1][2], 1e-12);
    EXPECT_NEAR(a.r[0][2], -b.r[0][2], 1e-12);
}

// --- grouping -------------------------------------------------------------------

TEST(Groups, Boundaries) {
    const GroupLabel g = assign_groups(subject("a", 45, Sex::M, 30));
    EXPECT_EQ(g.age_group, 2);
    EXPECT_EQ(g.bmi_group, BmiGroup::Ge30);
    EXPECT_EQ(assign_groups(subject("b", 18, Sex::F, 22)).age_group, 1);
    EXPECT_EQ(assign_groups(subject("b", 30, Sex::F, 22)).age_group, 1);
    EXPECT_EQ(assign_groups(subject("b", 31, Sex::F, 22)).age_group, 2);
    EXPECT_EQ(assign_groups(subject("b", 60, Sex::F, 22)).age_group, 3);
    EXPECT_EQ(assign_groups(subject("b", 61, Sex::F, 22)).age_group, 4);
    EXPECT_EQ(assign_groups(subject("b", 40, Sex::F, 24.99)).bmi_group, BmiGroup::Lt25);
    EXPECT_EQ(assign_groups(subject("b", 40, Sex::F, 25)).bmi_group, BmiGroup::B25_30);
    EXPECT_EQ(assign_groups(subject("b", 40, Sex::F, 29.99)).bmi_group, BmiGroup::B25_30);
    EXPECT_EQ(code_of([] { assign_groups(subject("c", 17, Sex::F, 22)); }), ErrorCode::UnderAge);
    EXPECT_EQ(code_of([] { assign_groups(subject("c", 40, Sex::F, 0)); }), ErrorCode::InvalidSubject);
}

TEST(Groups, PartitionEverySubject) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> age(18, 95), bmi(15, 50);
    for (int i = 0; i < 500; ++i) {
        const SubjectRecord s = subject("s", std::round(age(rng)), i % 2 ? Sex::M : Sex::F, bmi(rng));
        const GroupLabel g = assign_groups(s);
        for (Factor f : {Factor::Age, Factor::Sex, Factor::Bmi}) {
            const int idx = group_of(g, f);
            EXPECT_GE(idx, 0);
            EXPECT_LT(idx, static_cast<int>(group_names(f).size()));
        }
        EXPECT_EQ(assign_groups(s), g);
    }
}

// --- representative subject --------------------------------------------------------

namespace {

std::string brute_force_representative(const std::vector<SubjectRecord>& g, const std::vector<std::string>& vars) {
    const std::size_t n = g.size();
    std::vector<double> dist(n, 0.0);
    for (const auto& v : vars) {
        std::vector<double> x;
        for (const auto& s : g) x.push_back(*variable_value(s, v));
        double mean = 0;
        for (double a : x) mean += a;
        mean /= static_cast<double>(n);
        double ss = 0;
        for (double a : x) ss += (a - mean) * (a - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = sd > 0 ? (x[i] - mean) / sd : 0.0;
            dist[i] += z * z;
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (dist[i] < dist[best] || (dist[i] == dist[best] && g[i].id < g[best].id)) best = i;
    return g[best].id;
}

}  // namespace

TEST(Representative, Examples) {
    SubjectRecord a = subject("a", 30, Sex::F, 22);
    EXPECT_EQ(representative_subject({a}, {"age_years", "bmi_kg_m2"}), "a");
    SubjectRecord b = subject("b", 40, Sex::F, 24), c = subject("c", 50, Sex::F, 26);
    EXPECT_EQ(representative_subject({a, b, c}, {"age_years", "bmi_kg_m2"}), "b");
    EXPECT_EQ(code_of([] { representative_subject({}, {"age_years"}); }), ErrorCode::EmptyGroup);
    EXPECT_EQ(code_of([&] { representative_subject({a, b}, {"waist"}); }), ErrorCode::MissingVariable);
}

TEST(Representative, TieGoesToLowestId) {
    SubjectRecord a = subject("z9", 30, Sex::F, 22), b = subject("a1", 50, Sex::F, 22);
    EXPECT_EQ(representative_subject({a, b}, {"age_years"}), "a1");
    // two members sit symmetrically about the mean; rounding must not break the tie
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(10, 90);
    for (int trial = 0; trial < 200; ++trial) {
        SubjectRecord p = subject("p", u(rng), Sex::F, u(rng)), q = subject("q", u(rng), Sex::M, u(rng));
        EXPECT_EQ(representative_subject({q, p}, {"age_years", "bmi_kg_m2"}), "p") << trial;
    }
}

TEST(Representative, BruteForceAndAffineInvariance) {
    std::mt19937_64 rng(19);
    const std::vector<std::string> vars{"length_mm", "sagitta_mm", "max_width_mm", "age_years", "waist"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SubjectRecord> g, scaled;
        for (int i = 0; i < 10; ++i) {
            const auto v = gaussian(rng, 5);
            SubjectRecord s = subject("S" + std::to_string((i * 7 + trial) % 10), 40 + 10 * v[3], Sex::F, 25);
            s.metrics.length_mm = 375 + 36 * v[0];
            s.metrics.sagitta_mm = 16 + 17 * v[1];
            s.metrics.max_width_mm = 44 + 19 * v[2];
            s.covariates["waist"] = 90 + 12 * v[4];
            g.push_back(s);
            s.metrics.length_mm = -2.5 * s.metrics.length_mm + 11;
            s.covariates["waist"] = 0.01 * s.covariates["waist"];
            scaled.push_back(s);
        }
        const std::string r = representative_subject(g, vars);
        EXPECT_EQ(r, brute_force_representative(g, vars));
        EXPECT_EQ(representative_subject(scaled, vars), r);
    }
}

// --- compare -------------------------------------------------------------------

TEST(Compare, DispatchRules) {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> nd(0, 1);
    std::exponential_distribution<double> ed(1.0);
    std::vector<SubjectRecord> cohort;
    const double ages[] = {25, 38, 52, 70};
    for (int i = 0; i < 80; ++i) {
        SubjectRecord s = subject("P" + std::to_string(i), ages[i % 4], i % 2 ? Sex::M : Sex::F, 22 + i % 13);
        s.metrics.length_mm = 375 + 36 * nd(rng);
        s.metrics.sagitta_mm = std::pow(ed(rng), 3) * 10;
        cohort.push_back(s);
    }
    const TestResult t = compare("length_mm", Factor::Sex, cohort);
    EXPECT_EQ(t.method, TestMethod::T);
    ASSERT_TRUE(t.normality_p);
    EXPECT_GE(*t.normality_p, kNormalityLevel);
    const TestResult k = compare("sagitta_mm", Factor::Age, cohort);
    EXPECT_EQ(k.method, TestMethod::KruskalWallis);
    const TestResult m = compare("sagitta_mm", Factor::Sex, cohort);
    EXPECT_EQ(m.method, TestMethod::MannWhitney);
    const TestResult a = compare("length_mm", Factor::Age, cohort);
    EXPECT_EQ(a.method, TestMethod::Anova);
    ASSERT_TRUE(a.residual_normality_p);
}

TEST(Compare, NeedsTwoGroups) {
    std::vector<SubjectRecord> cohort;
    for (int i = 0; i < 6; ++i) cohort.push_back(subject("P" + std::to_string(i), 25, Sex::F, 22 + i));
    EXPECT_EQ(code_of([&] { compare("bmi_kg_m2", Factor::Sex, cohort); }), ErrorCode::TooFewGroups);
}
