#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <ostream>

#include "pstitch/pipeline.hpp"
#include "pstitch/serialize.hpp"
#include "pstitch/synthetic.hpp"

namespace pstitch {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonFlags {
  std::string config;
  double grid_size = 0;
  double lambda[8] = {};
  double slope_tol = 0;
  double dist_tol = 0;
  std::uint64_t seed = 0;
  bool d_dir_raw = false;

  CLI::Option* grid_opt = nullptr;
  CLI::Option* lambda_opt[8] = {};
  CLI::Option* slope_opt = nullptr;
  CLI::Option* dist_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "JSON file mirroring the run configuration")->check(CLI::ExistingFile);
    grid_opt = app.add_option("--grid-size", grid_size, "mesh cell size in pixels");
    static const char* names[8] = {"sd", "sa", "l", "gh", "ov", "nv", "ll", "gl"};
    for (int i = 0; i < 8; ++i) {
      lambda_opt[i] = app.add_option(std::string("--lambda-") + names[i], lambda[i],
                                     std::string("weight of the ") + names[i] + " term");
    }
    slope_opt = app.add_option("--slope-tol", slope_tol, "line connection angle tolerance (radians)");
    dist_opt = app.add_option("--dist-tol", dist_tol, "line connection endpoint gap (pixels)");
    seed_opt = app.add_option("--seed", seed, "random seed");
    app.add_flag("--d-dir-raw", d_dir_raw, "compare raw (unnormalized) leg cross products in D_dir");
  }

  RunConfig resolve() const {
    ConfigOverrides o;
    if (grid_opt->count()) o.grid_size = grid_size;
    std::optional<double>* slots[8] = {&o.lambda_sd, &o.lambda_sa, &o.lambda_l, &o.lambda_gh,
                                       &o.lambda_ov, &o.lambda_nv, &o.lambda_ll, &o.lambda_gl};
    for (int i = 0; i < 8; ++i) {
      if (lambda_opt[i]->count()) *slots[i] = lambda[i];
    }
    if (slope_opt->count()) o.slope_tol = slope_tol;
    if (dist_opt->count()) o.dist_tol = dist_tol;
    if (seed_opt->count()) o.seed = seed;
    if (d_dir_raw) o.d_dir_raw = true;
    return resolve_config(config.empty() ? std::nullopt : std::optional<fs::path>(config), o);
  }
};

fs::path with_suffix(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension();
  return p.string() + suffix;
}

void report_error(std::ostream& err, bool as_json, const std::string& stage, const std::string& code,
                  const std::string& message) {
  if (as_json) {
    err << json{{"stage", stage}, {"code", code}, {"message", message}}.dump() << "\n";
  } else {
    err << "error";
    if (!stage.empty()) err << " [" << stage << "]";
    err << " " << code << ": " << message << "\n";
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mesh-warp image stitching with line and plane constraints"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "print errors as JSON objects");

  CommonFlags stitch_flags, eval_flags, features_flags, fixture_flags;

  CLI::App* stitch_cmd = app.add_subcommand("stitch", "warp TARGET onto REFERENCE and write the panorama");
  std::string target_path, reference_path, matches_path, out_path = "stitched.png", report_path, mesh_path,
                                                          dump_path;
  stitch_cmd->add_option("target", target_path, "image to warp")->required()->check(CLI::ExistingFile);
  stitch_cmd->add_option("reference", reference_path, "fixed image")->required()->check(CLI::ExistingFile);
  stitch_cmd->add_option("--matches", matches_path, "precomputed matches JSON (skips detection)")
      ->check(CLI::ExistingFile);
  stitch_cmd->add_option("--out", out_path, "panorama PNG");
  stitch_cmd->add_option("--report", report_path, "metrics JSON (default: <out>.report.json)");
  stitch_cmd->add_option("--mesh", mesh_path, "mesh JSON (default: <out>.mesh.json)");
  stitch_cmd->add_option("--dump-system", dump_path, "write the sparse system A, b as text triplets");
  stitch_cmd->add_flag("--json-errors", json_errors, "print errors as JSON objects");
  stitch_flags.attach(*stitch_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "metrics of a saved mesh against a matches file");
  std::string eval_mesh, eval_matches, eval_report;
  eval_cmd->add_option("mesh", eval_mesh, "mesh JSON")->required();
  eval_cmd->add_option("matches", eval_matches, "matches JSON")->required();
  eval_cmd->add_option("--report", eval_report, "write the report here instead of stdout");
  eval_cmd->add_flag("--json-errors", json_errors, "print errors as JSON objects");
  eval_flags.attach(*eval_cmd);

  CLI::App* features_cmd = app.add_subcommand("features", "dump detected segments, groups, extended matches, stars");
  std::string feat_image, feat_reference, feat_matches, feat_out;
  features_cmd->add_option("image", feat_image, "target image")->required()->check(CLI::ExistingFile);
  features_cmd->add_option("reference", feat_reference, "reference image")->check(CLI::ExistingFile);
  features_cmd->add_option("--matches", feat_matches, "precomputed matches JSON")->check(CLI::ExistingFile);
  features_cmd->add_option("--out", feat_out, "write JSON here instead of stdout");
  features_cmd->add_flag("--json-errors", json_errors, "print errors as JSON objects");
  features_flags.attach(*features_cmd);

  CLI::App* fixture_cmd = app.add_subcommand("fixture", "write a synthetic plane scene");
  std::string fixture_dir = ".";
  int fixture_w = 800, fixture_h = 600;
  bool fixture_identity = false;
  fixture_cmd->add_option("--out-dir", fixture_dir, "output directory");
  fixture_cmd->add_option("--width", fixture_w, "image width")->check(CLI::PositiveNumber);
  fixture_cmd->add_option("--height", fixture_h, "image height")->check(CLI::PositiveNumber);
  fixture_cmd->add_flag("--identity", fixture_identity, "use the identity homography");
  fixture_cmd->add_flag("--json-errors", json_errors, "print errors as JSON objects");
  fixture_flags.attach(*fixture_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const CommonFlags& common = stitch_cmd->parsed()    ? stitch_flags
                                : eval_cmd->parsed()      ? eval_flags
                                : features_cmd->parsed()  ? features_flags
                                                          : fixture_flags;
    const RunConfig cfg = common.resolve();
    if (stitch_cmd->parsed()) {
      const Image target = load_image(target_path);
      const Image reference = load_image(reference_path);
      StitchOptions options;
      if (!matches_path.empty()) {
        options.matches = load_matches(matches_path, ImageBounds{double(target.width), double(target.height)},
                                       ImageBounds{double(reference.width), double(reference.height)});
      }
      if (!dump_path.empty()) options.dump_system = fs::path(dump_path);
      const StitchResult r = stitch(target, reference, cfg, options);
      const fs::path out_file(out_path);
      save_png(out_file, r.panorama.image);
      write_text(mesh_path.empty() ? with_suffix(out_file, ".mesh.json") : fs::path(mesh_path),
                 mesh_to_json(r.warp));
      save_matches(with_suffix(out_file, ".matches.json"), evaluation_matches(r.features));
      write_text(report_path.empty() ? with_suffix(out_file, ".report.json") : fs::path(report_path),
                 report_to_json(r.report, run_summary_json(r)));
      out << "rmse " << r.report.rmse << " d_dis " << r.report.d_dis << " d_dir " << r.report.d_dir << " K "
          << r.report.k << "\n";
    } else if (eval_cmd->parsed()) {
      const MeshWarp warp = mesh_from_json(read_text(eval_mesh), eval_mesh);
      const MatchSet matches = load_matches(eval_matches);
      const MetricReport report = evaluate(matches, warp, cfg.plane, !cfg.d_dir_raw);
      const std::string text = report_to_json(report);
      if (eval_report.empty()) {
        out << text;
      } else {
        write_text(eval_report, text);
      }
    } else if (features_cmd->parsed()) {
      const Image target = load_image(feat_image);
      std::optional<Image> reference;
      if (!feat_reference.empty()) reference = load_image(feat_reference);
      std::optional<MatchSet> matches;
      if (!feat_matches.empty()) {
        if (!reference) throw StitchError(ErrorCode::kInvalidArgument, "--matches needs a reference image");
        matches = load_matches(feat_matches);
      }
      const std::string text = features_json(target, reference, matches, cfg);
      if (feat_out.empty()) {
        out << text;
      } else {
        write_text(feat_out, text);
      }
    } else if (fixture_cmd->parsed()) {
      const Homography h = fixture_identity ? Homography::identity() : random_moderate_homography(cfg.seed);
      const SyntheticScene scene = gen_plane_scene(cfg.seed, fixture_w, fixture_h, h);
      const fs::path dir(fixture_dir);
      fs::create_directories(dir);
      save_png(dir / "target.png", scene.target);
      save_png(dir / "reference.png", scene.reference);
      save_matches(dir / "matches.json", scene.matches);
      std::vector<double> hv;
      for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) hv.push_back(h(row, col));
      write_text(dir / "homography.json", json{{"h", hv}, {"seed", cfg.seed}}.dump(2) + "\n");
      out << "wrote " << (dir / "target.png").string() << " " << (dir / "reference.png").string() << "\n";
    }
  } catch (const StitchError& e) {
    report_error(err, json_errors, e.stage(), std::string(to_string(e.code())), e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, json_errors, "", "io-error", e.what());
    return 1;
  }
  return 0;
}

}  // namespace pstitch
