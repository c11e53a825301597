#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lineamorph/error.hpp"
#include "lineamorph/morphometry.hpp"

namespace lineamorph {

inline constexpr double kSignificanceLevel = 0.025;
inline constexpr double kNormalityLevel = 0.05;

enum class Sex { M, F };
enum class BmiGroup { Lt25, B25_30, Ge30 };
enum class Factor { Age, Sex, Bmi };

std::string_view to_string(Sex s);
std::string_view to_string(BmiGroup g);
std::string_view to_string(Factor f);
Sex parse_sex(std::string_view s);

struct SubjectRecord {
    std::string id;
    double age_years = 0.0;
    Sex sex = Sex::F;
    double bmi_kg_m2 = 0.0;
    std::map<std::string, double> covariates;
    MetricsRecord metrics;
};

struct GroupLabel {
    int age_group = 1;  // 1: 18-30, 2: 31-45, 3: 46-60, 4: >60
    BmiGroup bmi_group = BmiGroup::Lt25;
    Sex sex = Sex::F;
    friend bool operator==(const GroupLabel&, const GroupLabel&) = default;
};

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    std::optional<double> sd;  // sample sd, undefined for n = 1
    double min = 0.0;
    double max = 0.0;
};

enum class TestMethod { ShapiroWilk, T, MannWhitney, Anova, KruskalWallis };
std::string_view to_string(TestMethod m);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

struct TestResult {
    TestMethod method = TestMethod::T;
    std::string statistic_name;
    double statistic = 0.0;
    double p_value = 1.0;
    bool significant = false;  // p_value < kSignificanceLevel
    bool exact = false;        // p from full enumeration
    std::vector<double> df;
    std::optional<double> p_asymptotic;   // set alongside exact p-values
    std::optional<WelchResult> welch;     // t test only, when variances differ
    // Filled by compare().
    std::optional<double> normality_p;
    std::optional<double> residual_normality_p;
};

Summary summarize(std::span<const double> sample);

TestResult shapiro_wilk(std::span<const double> sample);

/// Pooled-variance two-sample t test, two-tailed.
TestResult t_test(std::span<const double> a, std::span<const double> b);

/// U is reported for sample a.
TestResult mann_whitney(std::span<const double> a, std::span<const double> b);

TestResult anova(const std::vector<std::vector<double>>& groups);
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct CorrelationMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> r;
    std::vector<std::vector<std::size_t>> n;
    std::vector<std::vector<bool>> defined;  // false when a variable is constant over the pair
};

/// rows[subject][variable]; missing entries are skipped pairwise.
CorrelationMatrix pearson_matrix(const std::vector<std::string>& names,
                                 const std::vector<std::vector<std::optional<double>>>& rows);

GroupLabel assign_groups(const SubjectRecord& subject);
int group_of(const GroupLabel& label, Factor factor);
std::vector<std::string> group_names(Factor factor);

/// Metric, demographic and covariate values by name.
std::optional<double> variable_value(const SubjectRecord& subject, std::string_view name);
std::vector<std::string> metric_variable_names();

std::string representative_subject(const std::vector<SubjectRecord>& group,
                                   const std::vector<std::string>& variables);

/// Normality-gated dispatch to t / ANOVA or Mann-Whitney / Kruskal-Wallis.
TestResult compare(std::string_view variable, Factor grouping, const std::vector<SubjectRecord>& cohort);

}  // namespace lineamorph
