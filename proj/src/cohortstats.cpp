#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "lineamorph/cohortstats.hpp"

namespace lineamorph {

namespace bm = boost::math;

namespace {

constexpr std::size_t kExactMannWhitneyMax = 16;
constexpr std::size_t kExactKruskalMax = 10;

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sum of squared deviations, two-pass.
double ssd(std::span<const double> v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s;
}

TestResult make(TestMethod m, std::string name, double stat, double p) {
    TestResult r;
    r.method = m;
    r.statistic_name = std::move(name);
    r.statistic = stat;
    r.p_value = std::clamp(p, 0.0, 1.0);
    r.significant = r.p_value < kSignificanceLevel;
    return r;
}

// Midranks of the pooled values, in input order.
std::vector<double> midranks(const std::vector<double>& pooled, bool& ties, double& tie_term) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> rank(n);
    ties = false;
    tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t q = i; q <= j; ++q) rank[order[q]] = r;
        const double t = static_cast<double>(j - i + 1);
        if (t > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        i = j + 1;
    }
    return rank;
}

double chi2_sf(double x, double df) {
    if (!(x > 0.0)) return 1.0;
    if (std::isinf(x)) return 0.0;
    return bm::cdf(bm::complement(bm::chi_squared_distribution<double>(df), x));
}

}  // namespace

std::string_view to_string(Sex s) { return s == Sex::M ? "M" : "F"; }

std::string_view to_string(BmiGroup g) {
    switch (g) {
        case BmiGroup::Lt25: return "lt25";
        case BmiGroup::B25_30: return "b25_30";
        case BmiGroup::Ge30: return "ge30";
    }
    return "lt25";
}

std::string_view to_string(Factor f) {
    switch (f) {
        case Factor::Age: return "age";
        case Factor::Sex: return "sex";
        case Factor::Bmi: return "bmi";
    }
    return "age";
}

Sex parse_sex(std::string_view s) {
    if (s == "M" || s == "m") return Sex::M;
    if (s == "F" || s == "f") return Sex::F;
    throw Error(ErrorCode::InvalidSubject, "sex must be M or F, got '" + std::string(s) + "'", "parse_sex");
}

std::string_view to_string(TestMethod m) {
    switch (m) {
        case TestMethod::ShapiroWilk: return "shapiro_wilk";
        case TestMethod::T: return "t";
        case TestMethod::MannWhitney: return "mann_whitney";
        case TestMethod::Anova: return "anova";
        case TestMethod::KruskalWallis: return "kruskal_wallis";
    }
    return "t";
}

Summary summarize(std::span<const double> sample) {
    if (sample.empty()) throw Error(ErrorCode::EmptySample, "empty sample", "summarize");
    Summary s;
    s.n = sample.size();
    s.mean = mean_of(sample);
    s.min = *std::min_element(sample.begin(), sample.end());
    s.max = *std::max_element(sample.begin(), sample.end());
    if (s.n >= 2) s.sd = std::sqrt(ssd(sample, s.mean) / static_cast<double>(s.n - 1));
    return s;
}

TestResult t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw Error(ErrorCode::SampleTooSmall, "t test needs two values per group", "t_test");
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    const double va = ssd(a, ma) / (na - 1.0);
    const double vb = ssd(b, mb) / (nb - 1.0);
    const double df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    double t, p;
    if (sp2 > 0.0) {
        t = (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
        p = 2.0 * bm::cdf(bm::complement(bm::students_t_distribution<double>(df), std::abs(t)));
    } else if (ma == mb) {
        t = 0.0;
        p = 1.0;
    } else {
        t = ma < mb ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        p = 0.0;
    }
    TestResult r = make(TestMethod::T, "t", t, p);
    r.df = {df};

    // Variance-ratio check; emit Welch when it rejects equality.
    if (va > 0.0 && vb > 0.0) {
        const bm::fisher_f_distribution<double> f(na - 1.0, nb - 1.0);
        const double ratio = va / vb;
        const double pf = 2.0 * std::min(bm::cdf(f, ratio), bm::cdf(bm::complement(f, ratio)));
        if (pf < kNormalityLevel) {
            const double sa = va / na;
            const double sb = vb / nb;
            WelchResult w;
            w.t = (ma - mb) / std::sqrt(sa + sb);
            w.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
            w.p_value = std::min(
                1.0, 2.0 * bm::cdf(bm::complement(bm::students_t_distribution<double>(w.df), std::abs(w.t))));
            r.welch = w;
        }
    }
    return r;
}

TestResult mann_whitney(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "Mann-Whitney needs two non-empty samples",
                                            "mann_whitney");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    bool ties = false;
    double tie_term = 0.0;
    const std::vector<double> rank = midranks(pooled, ties, tie_term);
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    const std::size_t n = na + nb;
    double ra = 0.0;
    for (std::size_t i = 0; i < na; ++i) ra += rank[i];
    const double u = ra - static_cast<double>(na * (na + 1)) / 2.0;

    const double mu = static_cast<double>(na * nb) / 2.0;
    const double nn = static_cast<double>(n);
    const double var =
        static_cast<double>(na * nb) / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    double p_asym = 1.0;
    if (var > 0.0) {
        const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
        p_asym = std::min(1.0, 2.0 * bm::cdf(bm::complement(bm::normal_distribution<double>(), z)));
    }

    if (n <= kExactMannWhitneyMax && !ties) {
        // count[k][s]: subsets of size k of {0..i} with rank-sum offset s.
        const std::size_t umax = na * nb;
        std::vector<std::vector<double>> count(na + 1, std::vector<double>(umax + 1, 0.0));
        count[0][0] = 1.0;
        // U counts pairs; building by element i with i earlier elements, picking it as the
        // k-th chosen adds (i - (k - 1)) to U.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = std::min(i + 1, na); k >= 1; --k) {
                const std::size_t add = i - (k - 1);
                if (add > umax) continue;
                for (std::size_t s = umax - add + 1; s-- > 0;) {
                    count[k][s + add] += count[k - 1][s];
                }
            }
        }
        const auto& dist = count[na];
        double total = 0.0, le = 0.0, ge = 0.0;
        const auto ui = static_cast<std::size_t>(std::llround(u));
        for (std::size_t s = 0; s <= umax; ++s) {
            total += dist[s];
            if (s <= ui) le += dist[s];
            if (s >= ui) ge += dist[s];
        }
        TestResult r = make(TestMethod::MannWhitney, "U", u, std::min(1.0, 2.0 * std::min(le, ge) / total));
        r.exact = true;
        r.p_asymptotic = p_asym;
        return r;
    }
    return make(TestMethod::MannWhitney, "U", u, p_asym);
}

TestResult anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw Error(ErrorCode::TooFewGroups, "ANOVA needs two groups", "anova");
    std::size_t total = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw Error(ErrorCode::SampleTooSmall, "every ANOVA group needs two values", "anova");
        total += g.size();
        for (double x : g) grand += x;
    }
    grand /= static_cast<double>(total);
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        ssw += ssd(g, m);
    }
    const double df1 = static_cast<double>(groups.size() - 1);
    const double df2 = static_cast<double>(total - groups.size());
    double f, p;
    if (ssw > 0.0) {
        f = (ssb / df1) / (ssw / df2);
        p = bm::cdf(bm::complement(bm::fisher_f_distribution<double>(df1, df2), f));
    } else if (ssb > 0.0) {
        f = std::numeric_limits<double>::infinity();
        p = 0.0;
    } else {
        f = 0.0;
        p = 1.0;
    }
    TestResult r = make(TestMethod::Anova, "F", f, p);
    r.df = {df1, df2};
    return r;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    std::vector<std::vector<double>> g;
    for (const auto& x : groups) {
        if (!x.empty()) g.push_back(x);
    }
    if (g.size() < 2) throw Error(ErrorCode::TooFewGroups, "Kruskal-Wallis needs two non-empty groups",
                                  "kruskal_wallis");
    std::vector<double> pooled;
    std::vector<std::size_t> sizes;
    for (const auto& x : g) {
        pooled.insert(pooled.end(), x.begin(), x.end());
        sizes.push_back(x.size());
    }
    const std::size_t n = pooled.size();
    if (n < 3) throw Error(ErrorCode::SampleTooSmall, "Kruskal-Wallis needs three values", "kruskal_wallis");
    bool ties = false;
    double tie_term = 0.0;
    const std::vector<double> rank = midranks(pooled, ties, tie_term);
    const double nn = static_cast<double>(n);
    const double c = 1.0 - tie_term / (nn * nn * nn - nn);
    const double df = static_cast<double>(g.size() - 1);

    auto h_of = [&](const std::vector<double>& sums) {
        double h = 0.0;
        for (std::size_t i = 0; i < sums.size(); ++i) h += sums[i] * sums[i] / static_cast<double>(sizes[i]);
        return (12.0 / (nn * (nn + 1.0)) * h - 3.0 * (nn + 1.0)) / c;
    };
    if (!(c > 0.0)) {
        TestResult r = make(TestMethod::KruskalWallis, "H", 0.0, 1.0);
        r.df = {df};
        return r;
    }
    std::vector<double> sums(g.size(), 0.0);
    {
        std::size_t off = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t q = 0; q < sizes[i]; ++q) sums[i] += rank[off + q];
            off += sizes[i];
        }
    }
    const double h = std::max(0.0, h_of(sums));
    const double p_asym = chi2_sf(h, df);

    if (n <= kExactKruskalMax) {
        // Enumerate every assignment of the pooled ranks to groups of the observed sizes.
        std::vector<std::size_t> left = sizes;
        std::vector<double> acc(g.size(), 0.0);
        double total = 0.0, extreme = 0.0;
        const double tol = 1e-9 * std::max(1.0, h);
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            if (i == n) {
                total += 1.0;
                if (h_of(acc) >= h - tol) extreme += 1.0;
                return;
            }
            for (std::size_t q = 0; q < g.size(); ++q) {
                if (left[q] == 0) continue;
                --left[q];
                acc[q] += rank[i];
                rec(i + 1);
                acc[q] -= rank[i];
                ++left[q];
            }
        };
        rec(0);
        TestResult r = make(TestMethod::KruskalWallis, "H", h, extreme / total);
        r.exact = true;
        r.p_asymptotic = p_asym;
        r.df = {df};
        return r;
    }
    TestResult r = make(TestMethod::KruskalWallis, "H", h, p_asym);
    r.df = {df};
    return r;
}

CorrelationMatrix pearson_matrix(const std::vector<std::string>& names,
                                 const std::vector<std::vector<std::optional<double>>>& rows) {
    const std::size_t k = names.size();
    for (const auto& row : rows) {
        if (row.size() != k) {
            throw Error(ErrorCode::InvalidSubject, "row width does not match the variable list", "pearson_matrix");
        }
    }
    if (rows.size() < 2) throw Error(ErrorCode::SampleTooSmall, "need at least two subjects", "pearson_matrix");
    CorrelationMatrix m;
    m.names = names;
    m.r.assign(k, std::vector<double>(k, 0.0));
    m.n.assign(k, std::vector<std::size_t>(k, 0));
    m.defined.assign(k, std::vector<bool>(k, false));
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            std::vector<double> x, y;
            for (const auto& row : rows) {
                if (row[a] && row[b]) {
                    x.push_back(*row[a]);
                    y.push_back(*row[b]);
                }
            }
            m.n[a][b] = m.n[b][a] = x.size();
            if (a == b) {
                m.r[a][a] = 1.0;
                m.defined[a][a] = true;
                continue;
            }
            if (x.size() < 2) continue;
            const double mx = mean_of(x);
            const double my = mean_of(y);
            double sxy = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my);
            const double sxx = ssd(x, mx);
            const double syy = ssd(y, my);
            if (!(sxx > 0.0) || !(syy > 0.0)) continue;
            const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
            m.r[a][b] = m.r[b][a] = r;
            m.defined[a][b] = m.defined[b][a] = true;
        }
    }
    return m;
}

GroupLabel assign_groups(const SubjectRecord& s) {
    if (!std::isfinite(s.age_years) || s.age_years < 18.0) {
        throw Error(ErrorCode::UnderAge, "subject " + s.id + " is younger than 18", "assign_groups");
    }
    if (!(s.bmi_kg_m2 > 0.0)) {
        throw Error(ErrorCode::InvalidSubject, "subject " + s.id + " has a non-positive BMI", "assign_groups");
    }
    GroupLabel g;
    g.age_group = s.age_years <= 30.0 ? 1 : s.age_years <= 45.0 ? 2 : s.age_years <= 60.0 ? 3 : 4;
    g.bmi_group = s.bmi_kg_m2 < 25.0 ? BmiGroup::Lt25 : s.bmi_kg_m2 < 30.0 ? BmiGroup::B25_30 : BmiGroup::Ge30;
    g.sex = s.sex;
    return g;
}

int group_of(const GroupLabel& label, Factor factor) {
    switch (factor) {
        case Factor::Age: return label.age_group - 1;
        case Factor::Sex: return label.sex == Sex::M ? 0 : 1;
        case Factor::Bmi: return static_cast<int>(label.bmi_group);
    }
    return 0;
}

std::vector<std::string> group_names(Factor factor) {
    switch (factor) {
        case Factor::Age: return {"18-30", "31-45", "46-60", ">60"};
        case Factor::Sex: return {"M", "F"};
        case Factor::Bmi: return {"lt25", "b25_30", "ge30"};
    }
    return {};
}

std::vector<std::string> metric_variable_names() {
    return {"length_mm",
            "sagitta_mm",
            "max_width_mm",
            "max_ird_mm",
            "width_halfway_xiph_umb_mm",
            "width_above3cm_mm",
            "width_at_umbilicus_mm",
            "width_below2cm_mm",
            "width_halfway_umb_pubis_mm"};
}

std::optional<double> variable_value(const SubjectRecord& s, std::string_view name) {
    const MetricsRecord& m = s.metrics;
    if (name == "length_mm") return m.length_mm;
    if (name == "sagitta_mm") return m.sagitta_mm;
    if (name == "max_width_mm") return m.max_width_mm;
    if (name == "max_ird_mm") return m.max_ird_mm;
    if (name == "width_halfway_xiph_umb_mm") return m.landmarks.halfway_xiph_umb.width_mm;
    if (name == "width_above3cm_mm") return m.landmarks.above3cm.width_mm;
    if (name == "width_at_umbilicus_mm") return m.landmarks.at_umbilicus.width_mm;
    if (name == "width_below2cm_mm") return m.landmarks.below2cm.width_mm;
    if (name == "width_halfway_umb_pubis_mm") return m.landmarks.halfway_umb_pubis.width_mm;
    if (name == "age_years") return s.age_years;
    if (name == "bmi_kg_m2") return s.bmi_kg_m2;
    const auto it = s.covariates.find(std::string(name));
    if (it != s.covariates.end()) return it->second;
    return std::nullopt;
}

std::string representative_subject(const std::vector<SubjectRecord>& group, const std::vector<std::string>& variables) {
    if (group.empty()) throw Error(ErrorCode::EmptyGroup, "group is empty", "representative_subject");
    const std::size_t n = group.size();
    const std::size_t k = variables.size();
    std::vector<std::vector<double>> z(n, std::vector<double>(k, 0.0));
    for (std::size_t v = 0; v < k; ++v) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = variable_value(group[i], variables[v]);
            if (!x) {
                throw Error(ErrorCode::MissingVariable,
                            "subject " + group[i].id + " has no value for " + variables[v], "representative_subject");
            }
            col[i] = *x;
        }
        const double m = mean_of(col);
        const double sd = n > 1 ? std::sqrt(ssd(col, m) / static_cast<double>(n - 1)) : 0.0;
        for (std::size_t i = 0; i < n; ++i) z[i][v] = sd > 0.0 ? (col[i] - m) / sd : 0.0;
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (double q : z[i]) d += q * q;
        // distances equal up to rounding are ties
        const bool tie = i > 0 && std::abs(d - best_d) <= 1e-9 * std::max(1.0, best_d);
        if ((!tie && d < best_d) || (tie && group[i].id < group[best].id)) {
            best = i;
            best_d = d;
        }
    }
    return group[best].id;
}

TestResult compare(std::string_view variable, Factor grouping, const std::vector<SubjectRecord>& cohort) {
    const std::size_t k = group_names(grouping).size();
    std::vector<std::vector<double>> buckets(k);
    for (const auto& s : cohort) {
        const auto v = variable_value(s, variable);
        if (!v || !std::isfinite(*v)) continue;
        buckets[static_cast<std::size_t>(group_of(assign_groups(s), grouping))].push_back(*v);
    }
    std::vector<std::vector<double>> groups;
    for (auto& b : buckets) {
        if (!b.empty()) groups.push_back(std::move(b));
    }
    if (groups.size() < 2) {
        throw Error(ErrorCode::TooFewGroups,
                    std::string(variable) + " has fewer than two non-empty " + std::string(to_string(grouping)) +
                        " groups",
                    "compare");
    }

    std::vector<double> pooled, residuals;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        for (double x : g) {
            pooled.push_back(x);
            residuals.push_back(x - m);
        }
    }
    std::optional<double> p_var, p_res;
    bool normal = true;
    try {
        p_var = shapiro_wilk(pooled).p_value;
        p_res = shapiro_wilk(residuals).p_value;
        normal = *p_var >= kNormalityLevel && *p_res >= kNormalityLevel;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVariance && e.code() != ErrorCode::SampleTooSmall) throw;
        normal = false;
    }

    TestResult r;
    if (normal) {
        r = groups.size() == 2 ? t_test(groups[0], groups[1]) : anova(groups);
    } else {
        r = groups.size() == 2 ? mann_whitney(groups[0], groups[1]) : kruskal_wallis(groups);
    }
    r.normality_p = p_var;
    r.residual_normality_p = p_res;
    return r;
}

}  // namespace lineamorph
