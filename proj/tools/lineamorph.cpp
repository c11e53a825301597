// lineamorph command-line front end.
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "lineamorph/interslice.hpp"
#include "lineamorph/phantom.hpp"
#include "lineamorph/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lineamorph;

namespace {

std::set<Emit> parse_emit(const std::vector<std::string>& names) {
    static const std::map<std::string, Emit> table{
        {"json", Emit::Json}, {"csv", Emit::Csv}, {"svg", Emit::Svg}, {"mesh", Emit::Mesh}};
    std::set<Emit> out;
    for (const auto& n : names) out.insert(table.at(n));
    return out;
}

int run_phantom(const fs::path& spec_path, const fs::path& out_dir) {
    const PhantomSpec spec = load_phantom_spec(spec_path);
    const Phantom p = generate_phantom(spec);
    fs::create_directories(out_dir);
    save_mask(p.mask, out_dir / "mask.lmh");
    save_landmarks(p.landmarks, out_dir / "landmarks.json");
    std::ofstream(out_dir / "truth.json") << ground_truth_json(p.truth);
    std::ofstream(out_dir / "spec.json") << phantom_spec_json(spec);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linea alba morphometry from segmentation masks"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string offset_mode = "arc";
    std::vector<std::string> emit{"json", "csv"};

    auto* measure = app.add_subcommand("measure", "Measure one subject");
    measure->add_option("--mask", cfg.mask_path, "Mask header (.lmh)")->required();
    measure->add_option("--landmarks", cfg.landmarks_path, "Landmark JSON")->required();
    measure->add_option("--out", cfg.out_dir, "Output directory")->required();
    measure->add_option("--offset-mode", offset_mode, "Landmark offsets along the arc or the z axis")
        ->check(CLI::IsMember({"arc", "axial"}));
    measure->add_flag("--closing", cfg.closing, "Close the mask with a unit ball before measuring");
    measure->add_option("--emit", emit, "Outputs to write")->check(CLI::IsMember({"json", "csv", "svg", "mesh"}));

    std::vector<std::string> cohort_emit{"json", "svg"};
    auto* cohort = app.add_subcommand("cohort", "Measure a cohort and run the statistics battery");
    cohort->add_option("--manifest", cfg.manifest_path, "Cohort manifest CSV")->required();
    cohort->add_option("--out", cfg.out_dir, "Output directory")->required();
    cohort->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
    cohort->add_option("--offset-mode", offset_mode)->check(CLI::IsMember({"arc", "axial"}));
    cohort->add_flag("--closing", cfg.closing);
    cohort->add_option("--emit", cohort_emit)->check(CLI::IsMember({"json", "svg"}));

    fs::path spec_path, phantom_out;
    int cohort_n = 0;
    std::uint64_t cohort_seed = 0;
    double obese_factor = 1.0;
    auto* phantom = app.add_subcommand("phantom", "Generate a synthetic phantom or phantom cohort");
    auto* spec_opt = phantom->add_option("--spec", spec_path, "Phantom spec JSON");
    phantom->add_option("--out", phantom_out, "Output directory")->required();
    auto* n_opt = phantom->add_option("--cohort", cohort_n, "Generate a cohort of this size instead");
    phantom->add_option("--seed", cohort_seed, "Cohort seed");
    phantom->add_option("--obese-sagitta-factor", obese_factor, "Sagitta multiplier for BMI >= 30");
    spec_opt->excludes(n_opt);

    fs::path sparse_path, dense_out;
    bool interp_closing = false;
    auto* interp = app.add_subcommand("interp", "Fill between sparsely delineated slices");
    interp->add_option("--sparse", sparse_path, "Sparse mask header (.lmh) with delineated_z")->required();
    interp->add_option("--out", dense_out, "Output mask header (.lmh)")->required();
    interp->add_flag("--closing", interp_closing);

    CLI11_PARSE(app, argc, argv);
    cfg.offset_mode = offset_mode == "axial" ? OffsetMode::Axial : OffsetMode::Arc;

    try {
        if (*measure) {
            cfg.emit = parse_emit(emit);
            return run_measure(cfg, std::cerr);
        }
        if (*cohort) {
            cfg.emit = parse_emit(cohort_emit);
            const CohortOutcome o = run_cohort(cfg, std::cerr);
            if (o.exit_code == 0) {
                std::cerr << o.analyzed << " analyzed, " << o.quarantined << " quarantined\n";
            }
            return o.exit_code;
        }
        if (*phantom) {
            if (cohort_n > 0) {
                CohortEffects fx;
                fx.obese_sagitta_factor = obese_factor;
                const auto members = phantom_cohort(cohort_n, fx, cohort_seed);
                std::cout << write_phantom_cohort(members, phantom_out).string() << '\n';
                return 0;
            }
            if (spec_path.empty()) {
                std::cerr << "error: phantom needs --spec or --cohort\n";
                return kExitValidation;
            }
            return run_phantom(spec_path, phantom_out);
        }
        if (*interp) {
            const SparseDelineation sparse = load_sparse(sparse_path);
            InterpolationResult r = interpolate_stack_logged(sparse, {interp_closing});
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            save_mask(r.mask, dense_out);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << (e.op().empty() ? "lineamorph" : e.op()) << ": " << to_string(e.code()) << ": "
                  << e.what() << '\n';
        return is_validation_error(e.code()) ? kExitValidation : kExitGeometry;
    }
    return 0;
}
