#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lineamorph/cohortstats.hpp"
#include "lineamorph/morphometry.hpp"

namespace lineamorph {

enum class Emit { Json, Csv, Svg, Mesh };

struct RunConfig {
    std::filesystem::path mask_path;
    std::filesystem::path landmarks_path;
    std::filesystem::path manifest_path;
    std::filesystem::path out_dir;
    OffsetMode offset_mode = OffsetMode::Arc;
    bool closing = false;
    std::set<Emit> emit{Emit::Json, Emit::Csv, Emit::Svg};
    int threads = 0;  // 0: hardware concurrency
    std::uint64_t seed = 0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitGeometry = 3;

/// Errors that map to exit code 2 rather than 3.
bool is_validation_error(ErrorCode code);

/// LINEAMORPH_THREADS wins over `requested`; 0 means hardware concurrency.
int resolve_threads(int requested);

/// Writes metrics.json and profile.csv (plus mesh.obj when requested).
/// Returns 0, 2 on validation failure or 3 on geometry failure; diagnostics
/// go to `err` and name the failing op.
int run_measure(const RunConfig& config, std::ostream& err);

struct ManifestRow {
    std::size_t line = 0;
    std::string id;
    std::string age;
    std::string sex;
    std::string bmi;
    std::filesystem::path mask_path;
    std::filesystem::path landmarks_path;
    std::vector<std::pair<std::string, std::string>> covariates;
};

/// Paths are resolved against the manifest's directory. Throws IoFailure or
/// InvalidSubject for a malformed header.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

struct CohortOutcome {
    int exit_code = kExitOk;
    std::size_t analyzed = 0;
    std::size_t quarantined = 0;
};

/// Writes stats_report.json, widths_<factor>.svg and correlation.svg.
CohortOutcome run_cohort(const RunConfig& config, std::ostream& err);

// Serialization helpers (deterministic, full precision).
std::string metrics_json(const SubjectMeasurement& m, OffsetMode mode);
std::string profile_csv(const WidthProfile& profile);

struct GroupCurve {
    std::string name;
    std::vector<double> mean;  // on the normalized grid
    std::vector<double> sd;
    std::size_t n = 0;
};
struct LandmarkTick {
    std::string label;
    double t = 0.0;
};
std::string group_curve_svg(const std::string& title, const std::vector<GroupCurve>& curves,
                            const std::vector<LandmarkTick>& ticks);
std::string correlation_svg(const CorrelationMatrix& m);

}  // namespace lineamorph
