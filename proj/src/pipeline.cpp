#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "container.hpp"
#include "lineamorph/interslice.hpp"
#include "lineamorph/mesh.hpp"
#include "lineamorph/pipeline.hpp"
#include "report_detail.hpp"

namespace lineamorph {

using nlohmann::json;
namespace fs = std::filesystem;

bool is_validation_error(ErrorCode c) {
    switch (c) {
        case ErrorCode::MalformedHeader:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::UnsupportedEncoding:
        case ErrorCode::IoFailure:
        case ErrorCode::InvalidMask:
        case ErrorCode::InvalidLandmarks:
        case ErrorCode::UnderAge:
        case ErrorCode::InvalidSubject:
            return true;
        default:
            return false;
    }
}

namespace {

struct Loaded {
    VoxelMask mask;
    LandmarkSet landmarks;
};

// Loads and validates one subject; throws Error with the op set.
Loaded load_subject(const fs::path& mask_path, const fs::path& landmarks_path, bool closing) {
    Loaded l;
    try {
        l.mask = load_mask(mask_path);
    } catch (const Error& e) {
        throw Error(e.code(), mask_path.string() + ": " + e.what(), "load_mask");
    }
    try {
        l.landmarks = load_landmarks(landmarks_path);
    } catch (const Error& e) {
        throw Error(e.code(), landmarks_path.string() + ": " + e.what(), "load_landmarks");
    }
    const ValidationReport rep = validate_mask(l.mask, l.landmarks);
    if (!rep.ok) {
        std::string msg;
        for (const auto& is : rep.issues) {
            if (is.severity != Severity::Error) continue;
            if (!msg.empty()) msg += "; ";
            msg += is.code + ": " + is.message;
        }
        throw Error(ErrorCode::InvalidMask, msg, "validate_mask");
    }
    if (closing) l.mask = morphological_closing(l.mask);
    return l;
}

double parse_number(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidSubject, what + " '" + s + "' is not a number", "read_manifest");
    }
    return v;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

json test_json(const TestResult& r) {
    json j{{"method", to_string(r.method)},
           {"statistic_name", r.statistic_name},
           {"statistic", std::isfinite(r.statistic) ? json(r.statistic) : json(r.statistic > 0 ? "inf" : "-inf")},
           {"p_value", r.p_value},
           {"significant", r.significant},
           {"exact", r.exact},
           {"df", r.df}};
    if (r.p_asymptotic) j["p_asymptotic"] = *r.p_asymptotic;
    if (r.welch) j["welch"] = {{"t", r.welch->t}, {"df", r.welch->df}, {"p_value", r.welch->p_value}};
    if (r.normality_p) j["normality_p"] = *r.normality_p;
    if (r.residual_normality_p) j["residual_normality_p"] = *r.residual_normality_p;
    return j;
}

json summary_json(const Summary& s) {
    return json{{"n", s.n},
                {"mean", s.mean},
                {"sd", s.sd ? json(*s.sd) : json(nullptr)},
                {"min", s.min},
                {"max", s.max}};
}

}  // namespace

int resolve_threads(int requested) {
    if (const char* env = std::getenv("LINEAMORPH_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

int run_measure(const RunConfig& cfg, std::ostream& err) {
    Loaded l;
    try {
        l = load_subject(cfg.mask_path, cfg.landmarks_path, cfg.closing);
    } catch (const Error& e) {
        err << "error: " << e.op() << ": " << to_string(e.code()) << ": " << e.what() << '\n';
        return kExitValidation;
    }
    SubjectMeasurement m;
    try {
        m = measure_subject(l.mask, l.landmarks, {cfg.offset_mode});
    } catch (const Error& e) {
        err << "error: " << e.op() << ": " << to_string(e.code()) << ": " << e.what() << '\n';
        return is_validation_error(e.code()) ? kExitValidation : kExitGeometry;
    }
    try {
        fs::create_directories(cfg.out_dir);
        if (cfg.emit.count(Emit::Json)) detail::write_text_file(cfg.out_dir / "metrics.json", metrics_json(m, cfg.offset_mode));
        if (cfg.emit.count(Emit::Csv)) detail::write_text_file(cfg.out_dir / "profile.csv", profile_csv(m.profile));
        if (cfg.emit.count(Emit::Mesh)) write_obj(render_mesh(l.mask), cfg.out_dir / "mesh.obj");
    } catch (const std::exception& e) {
        err << "error: write_outputs: " << e.what() << '\n';
        return kExitValidation;
    }
    if (m.metrics.missing_fraction > 0.0) {
        err << "note: " << std::lround(100.0 * m.metrics.missing_fraction)
            << "% of slices were unmeasurable and filled by interpolation\n";
    }
    return kExitOk;
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open manifest " + path.string(), "read_manifest");
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::InvalidSubject, "manifest is empty", "read_manifest");
    const std::vector<std::string> header = split_csv(line);
    const std::vector<std::string> required{"id", "age", "sex", "bmi", "mask_path", "landmarks_path"};
    if (header.size() < required.size() || !std::equal(required.begin(), required.end(), header.begin())) {
        throw Error(ErrorCode::InvalidSubject, "manifest header must start with id,age,sex,bmi,mask_path,landmarks_path",
                    "read_manifest");
    }
    const fs::path base = path.parent_path();
    std::vector<ManifestRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> f = split_csv(line);
        f.resize(std::max(f.size(), header.size()));
        ManifestRow r;
        r.line = lineno;
        r.id = f[0];
        r.age = f[1];
        r.sex = f[2];
        r.bmi = f[3];
        r.mask_path = f[4].empty() ? fs::path() : base / f[4];
        r.landmarks_path = f[5].empty() ? fs::path() : base / f[5];
        for (std::size_t c = required.size(); c < header.size(); ++c) r.covariates.push_back({header[c], f[c]});
        rows.push_back(std::move(r));
    }
    return rows;
}

CohortOutcome run_cohort(const RunConfig& cfg, std::ostream& err) {
    CohortOutcome outcome;
    std::vector<ManifestRow> rows;
    try {
        rows = read_manifest(cfg.manifest_path);
    } catch (const Error& e) {
        err << "error: " << e.op() << ": " << e.what() << '\n';
        outcome.exit_code = kExitValidation;
        return outcome;
    }

    struct Result {
        bool ok = false;
        SubjectRecord record;
        NormalizedProfile curve;
        std::string op, code, message;
    };
    std::vector<Result> results(rows.size());
    auto process = [&](std::size_t i) {
        const ManifestRow& row = rows[i];
        Result& res = results[i];
        res.record.id = row.id;
        try {
            if (row.id.empty()) throw Error(ErrorCode::InvalidSubject, "empty subject id", "read_manifest");
            res.record.age_years = parse_number(row.age, "age");
            res.record.sex = parse_sex(row.sex);
            res.record.bmi_kg_m2 = parse_number(row.bmi, "bmi");
            for (const auto& [k, v] : row.covariates) {
                if (!v.empty()) res.record.covariates[k] = parse_number(v, k);
            }
            assign_groups(res.record);
            const Loaded l = load_subject(row.mask_path, row.landmarks_path, cfg.closing);
            const SubjectMeasurement m = measure_subject(l.mask, l.landmarks, {cfg.offset_mode});
            res.record.metrics = m.metrics;
            res.curve = *m.profile.normalized;
            res.ok = true;
        } catch (const Error& e) {
            res.op = e.op();
            res.code = std::string(to_string(e.code()));
            res.message = e.what();
        } catch (const std::exception& e) {
            res.op = "run_cohort";
            res.code = "Internal";
            res.message = e.what();
        }
    };

    const int nthreads = std::max(1, std::min<int>(resolve_threads(cfg.threads), static_cast<int>(rows.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) process(i);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    // Deterministic reduction ordered by subject id.
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return results[a].record.id < results[b].record.id; });

    std::vector<SubjectRecord> cohort;
    std::vector<const NormalizedProfile*> curves;
    json quarantined = json::array();
    json subjects = json::array();
    for (std::size_t i : order) {
        const Result& r = results[i];
        if (!r.ok) {
            quarantined.push_back(json{{"id", r.record.id},
                                       {"manifest_line", rows[i].line},
                                       {"op", r.op},
                                       {"code", r.code},
                                       {"message", r.message}});
            continue;
        }
        cohort.push_back(r.record);
        curves.push_back(&r.curve);
        const GroupLabel g = assign_groups(r.record);
        subjects.push_back(json{{"id", r.record.id},
                                {"age_years", r.record.age_years},
                                {"sex", to_string(r.record.sex)},
                                {"bmi_kg_m2", r.record.bmi_kg_m2},
                                {"groups",
                                 {{"age", group_names(Factor::Age)[static_cast<std::size_t>(g.age_group - 1)]},
                                  {"sex", to_string(g.sex)},
                                  {"bmi", to_string(g.bmi_group)}}},
                                {"covariates", r.record.covariates},
                                {"metrics", detail::metrics_record_json(r.record.metrics)}});
    }
    outcome.analyzed = cohort.size();
    outcome.quarantined = quarantined.size();
    for (const auto& q : quarantined) {
        err << "warning: quarantined " << q["id"].get<std::string>() << " (" << q["op"].get<std::string>()
            << "): " << q["message"].get<std::string>() << '\n';
    }

    const std::vector<Factor> factors{Factor::Age, Factor::Sex, Factor::Bmi};
    const std::vector<std::string> variables = metric_variable_names();

    json report;
    report["settings"] = {{"offset_mode", cfg.offset_mode == OffsetMode::Arc ? "arc" : "axial"},
                          {"closing", cfg.closing},
                          {"significance_level", kSignificanceLevel},
                          {"normality_level", kNormalityLevel}};
    report["n_rows"] = rows.size();
    report["n_analyzed"] = outcome.analyzed;
    report["n_quarantined"] = outcome.quarantined;
    report["quarantined"] = quarantined;
    report["subjects"] = subjects;

    json group_counts = json::object();
    for (Factor f : factors) {
        const auto names = group_names(f);
        json c = json::object();
        for (const auto& n : names) c[n] = 0;
        for (const auto& s : cohort) {
            const auto& n = names[static_cast<std::size_t>(group_of(assign_groups(s), f))];
            c[n] = c[n].get<int>() + 1;
        }
        group_counts[std::string(to_string(f))] = c;
    }
    report["group_counts"] = group_counts;

    json overall = json::object();
    json per_var = json::object();
    for (const auto& v : variables) {
        std::vector<double> all;
        for (const auto& s : cohort)
            if (auto x = variable_value(s, v)) all.push_back(*x);
        if (!all.empty()) overall[v] = summary_json(summarize(all));
        json vf = json::object();
        for (Factor f : factors) {
            const auto names = group_names(f);
            std::vector<std::vector<double>> buckets(names.size());
            for (const auto& s : cohort)
                if (auto x = variable_value(s, v))
                    buckets[static_cast<std::size_t>(group_of(assign_groups(s), f))].push_back(*x);
            json groups = json::object();
            for (std::size_t g = 0; g < names.size(); ++g) {
                groups[names[g]] = buckets[g].empty() ? json(nullptr) : summary_json(summarize(buckets[g]));
            }
            json entry{{"groups", groups}};
            try {
                entry["test"] = test_json(compare(v, f, cohort));
            } catch (const Error& e) {
                entry["test"] = nullptr;
                entry["error"] = std::string(to_string(e.code())) + ": " + e.what();
            }
            vf[std::string(to_string(f))] = entry;
        }
        per_var[v] = vf;
    }
    report["overall"] = overall;
    report["variables"] = per_var;

    json reps = json::object();
    for (Factor f : factors) {
        const auto names = group_names(f);
        json fr = json::object();
        for (std::size_t g = 0; g < names.size(); ++g) {
            std::vector<SubjectRecord> members;
            for (const auto& s : cohort)
                if (static_cast<std::size_t>(group_of(assign_groups(s), f)) == g) members.push_back(s);
            if (members.empty()) {
                fr[names[g]] = nullptr;
                continue;
            }
            fr[names[g]] = representative_subject(members, variables);
        }
        reps[std::string(to_string(f))] = fr;
    }
    report["representative_subjects"] = reps;

    // Correlation over metrics, demographics and covariates.
    std::vector<std::string> corr_names = variables;
    corr_names.push_back("age_years");
    corr_names.push_back("bmi_kg_m2");
    std::set<std::string> cov;
    for (const auto& s : cohort)
        for (const auto& [k, x] : s.covariates) cov.insert(k);
    corr_names.insert(corr_names.end(), cov.begin(), cov.end());
    std::optional<CorrelationMatrix> corr;
    if (cohort.size() >= 2) {
        std::vector<std::vector<std::optional<double>>> table;
        for (const auto& s : cohort) {
            std::vector<std::optional<double>> row;
            for (const auto& n : corr_names) row.push_back(variable_value(s, n));
            table.push_back(std::move(row));
        }
        corr = pearson_matrix(corr_names, table);
        report["correlation"] = {{"names", corr->names}, {"r", corr->r}, {"n", corr->n}, {"defined", corr->defined}};
    } else {
        report["correlation"] = nullptr;
    }

    try {
        fs::create_directories(cfg.out_dir);
        detail::write_text_file(cfg.out_dir / "stats_report.json", report.dump(2) + "\n");
        if (cfg.emit.count(Emit::Svg) && !cohort.empty()) {
            std::vector<LandmarkTick> ticks{{"xiphoid", 0.0}};
            auto mean_t = [&](auto pick) {
                double s = 0.0;
                for (const auto& c : cohort) s += pick(c.metrics.landmarks);
                return s / static_cast<double>(cohort.size());
            };
            ticks.push_back({"halfway", mean_t([](const LandmarkWidths& l) { return l.halfway_xiph_umb.t; })});
            ticks.push_back({"-3 cm", mean_t([](const LandmarkWidths& l) { return l.above3cm.t; })});
            ticks.push_back({"umbilicus", mean_t([](const LandmarkWidths& l) { return l.at_umbilicus.t; })});
            ticks.push_back({"+2 cm", mean_t([](const LandmarkWidths& l) { return l.below2cm.t; })});
            ticks.push_back({"halfway", mean_t([](const LandmarkWidths& l) { return l.halfway_umb_pubis.t; })});
            ticks.push_back({"pubis", 1.0});
            for (Factor f : factors) {
                const auto names = group_names(f);
                std::vector<GroupCurve> gc;
                for (std::size_t g = 0; g < names.size(); ++g) {
                    GroupCurve c;
                    c.name = names[g];
                    std::vector<const NormalizedProfile*> members;
                    for (std::size_t i = 0; i < cohort.size(); ++i)
                        if (static_cast<std::size_t>(group_of(assign_groups(cohort[i]), f)) == g)
                            members.push_back(curves[i]);
                    c.n = members.size();
                    if (members.empty()) continue;
                    c.mean.assign(kNormalizedSamples, 0.0);
                    c.sd.assign(kNormalizedSamples, 0.0);
                    for (std::size_t q = 0; q < static_cast<std::size_t>(kNormalizedSamples); ++q) {
                        std::vector<double> vals;
                        for (const auto* p : members) vals.push_back(p->width_mm[q]);
                        const Summary s = summarize(vals);
                        c.mean[q] = s.mean;
                        c.sd[q] = s.sd.value_or(0.0);
                    }
                    gc.push_back(std::move(c));
                }
                detail::write_text_file(cfg.out_dir / ("widths_" + std::string(to_string(f)) + ".svg"),
                                        group_curve_svg("Mean width by " + std::string(to_string(f)) + " group", gc,
                                                        ticks));
            }
            if (corr) detail::write_text_file(cfg.out_dir / "correlation.svg", correlation_svg(*corr));
        }
    } catch (const std::exception& e) {
        err << "error: write_outputs: " << e.what() << '\n';
        outcome.exit_code = kExitValidation;
    }
    return outcome;
}

}  // namespace lineamorph
