// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gelforce/calibration.hpp"
#include "gelforce/error.hpp"
#include "gelforce/fea.hpp"
#include "gelforce/frd_io.hpp"
#include "gelforce/material.hpp"
#include "gelforce/metrics.hpp"
#include "gelforce/projection.hpp"

namespace gelforce::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  bool verbose = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// Writes to --out, or to stdout when no path was given.
void emit(const Common& c, std::ostream& out, const std::string& text) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw FormatError("cannot open '" + c.out + "' for writing");
  f << text;
  if (!f) throw FormatError("failed writing '" + c.out + "'");
}

std::string require_out(const Common& c, const char* what) {
  if (c.out.empty()) throw ValidationError(std::string(what) + " needs --out");
  return c.out;
}

Mesh load_mesh(const std::string& path) {
  if (path.empty()) return meshgen_box(default_gel_box());
  return parse_inp(read_file(path)).mesh;
}

Material material(double c10, double poisson) { return Material::from_poisson(c10, poisson); }

RunConfig run_config(const std::string& path, const std::vector<std::string>& overrides, const Common& c,
                     bool seed_given) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  for (const auto& o : overrides) apply_override(cfg, o);
  if (seed_given) cfg.train.seed = c.seed;
  cfg.train.threads = c.threads;
  cfg.unet.check();
  cfg.train.check();
  return cfg;
}

nn::UNetConfig input_from_images(nn::UNetConfig cfg, const std::vector<nn::TrainingSample>& s) {
  if (s.empty()) throw ValidationError("no samples");
  cfg.input_height = s.front().image.height;
  cfg.input_width = s.front().image.width;
  cfg.check();
  return cfg;
}

void check_images(const nn::UNetConfig& cfg, const std::vector<nn::TrainingSample>& s) {
  for (const auto& x : s) {
    if (x.image.width != cfg.input_width || x.image.height != cfg.input_height) {
      throw ValidationError("image of sample '" + x.id + "' is " + std::to_string(x.image.width) + "x" +
                            std::to_string(x.image.height) + " but the network expects " +
                            std::to_string(cfg.input_width) + "x" + std::to_string(cfg.input_height));
    }
  }
}

// Diverging blue-white-red map of one channel, cells enlarged to `scale` px.
Image heatmap(const ForceGrid& g, int scale) {
  const int w = g.width() * scale, h = g.height() * scale, gap = scale;
  Image img(3 * w + 2 * gap, h, 1.0f);
  for (int c = 0; c < 3; ++c) {
    const double m = std::max(g.data().col(c).abs().maxCoeff(), 1e-12);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = std::clamp(g(y / scale, x / scale, c) / m, -1.0, 1.0);
        const float r = static_cast<float>(v > 0 ? 1.0 : 1.0 + v);
        const float b = static_cast<float>(v < 0 ? 1.0 : 1.0 - v);
        const float gr = static_cast<float>(1.0 - std::abs(v));
        float* p = &img.rgb[(static_cast<std::size_t>(y) * img.width + c * (w + gap) + x) * 3];
        p[0] = r;
        p[1] = gr;
        p[2] = b;
      }
    }
  }
  return img;
}

json stats_json(const ChannelStats& s) {
  json j;
  const char* names[3] = {"fx", "fy", "fz"};
  for (int c = 0; c < 3; ++c) j[names[c]] = {{"mean", s[c].mean}, {"std", s[c].std}};
  return j;
}

}  // namespace

ForceGrid to_resolution(const ForceGrid& g, const Resolution& r) {
  if (g.height() == r.height && g.width() == r.width) return g;
  if (r.height < 1 || r.width < 1 || g.height() % r.height != 0 || g.width() % r.width != 0) {
    throw ValidationError("label grid " + std::to_string(g.height()) + "x" + std::to_string(g.width()) +
                          " cannot be summed down to " + to_string(r));
  }
  ForceGrid out = g.block_sum(g.height() / r.height, g.width() / r.width);
  out.sample_id = g.sample_id;
  return out;
}

std::vector<nn::TrainingSample> load_split(const Manifest& m, const std::string& split, const Resolution& r) {
  auto samples = load_samples(m, m.split(split));
  for (auto& s : samples) s.label = to_resolution(s.label, r);
  return samples;
}

json bench(const nn::UNetParams<float>& p, int runs, int warmup, std::uint64_t seed) {
  if (runs < 1 || warmup < 0) throw ValidationError("bench needs runs >= 1 and warmup >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  nn::Tensor<float> x(1, p.config.input_channels, p.config.input_height, p.config.input_width);
  for (auto& v : x.flat()) v = u(rng);
  for (int i = 0; i < warmup; ++i) nn::unet_forward(p, x);
  std::vector<double> ms(runs);
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto y = nn::unet_forward(p, x);
    ms[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!y.flat().isFinite().all()) throw ValidationError("non-finite network output");
  }
  const Eigen::Map<const Eigen::ArrayXd> a(ms.data(), runs);
  const double mean = a.mean();
  return {{"runs", runs},
          {"warmup", warmup},
          {"mean_ms", mean},
          {"std_ms", std::sqrt((a - mean).square().mean())},
          {"min_ms", a.minCoeff()},
          {"max_ms", a.maxCoeff()},
          {"input", std::to_string(p.config.input_height) + "x" + std::to_string(p.config.input_width)},
          {"width", p.config.width},
          {"times_ms", ms}};
}

json run_ablation(const Manifest& m, const AblationOptions& opts, std::ostream* log) {
  json rows = json::array();
  for (const Resolution& r : opts.resolutions) {
    RunConfig cfg = opts.base;
    cfg.unet.output = r;
    const auto train_set = load_split(m, "train", r);
    auto val_set = load_split(m, "val", r);
    if (val_set.empty()) val_set = train_set;
    const auto eval_set = load_split(m, opts.eval_split, r);
    if (eval_set.empty()) throw ValidationError("split '" + opts.eval_split + "' is empty");
    cfg.unet = input_from_images(cfg.unet, train_set);
    const auto t0 = std::chrono::steady_clock::now();
    const nn::TrainResult tr = nn::train(train_set, val_set, cfg.unet, cfg.train);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<ForceGrid> preds, labels;
    for (const auto& s : eval_set) {
      preds.push_back(nn::predict(tr.params, s.image));
      labels.push_back(s.label);
    }
    const EvalReport rep = evaluate(preds, labels, config_digest(cfg));
    if (log) {
      *log << "ablation " << to_string(r) << ": fz MAE_TF " << rep.tf[2].mean << " +- " << rep.tf[2].std << " N ("
           << tr.steps << " steps, " << seconds << " s)\n";
    }
    rows.push_back({{"resolution", to_string(r)},
                    {"mae_tf", stats_json(rep.tf)},
                    {"mae_guf", stats_json(rep.guf)},
                    {"samples", rep.samples},
                    {"parameters", tr.params.parameter_count()},
                    {"steps", tr.steps},
                    {"best_epoch", tr.best_epoch},
                    {"train_seconds", seconds},
                    {"config_digest", rep.config_digest}});
  }
  return {{"eval_split", opts.eval_split}, {"rows", rows}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Force-label generation, calibration and force-estimation networks for vision tactile sensors",
               "gelforce"};
  app.require_subcommand(1);
  Common c;
  bool seed_given = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out,-o", c.out, "Output file (default: stdout where the output is text)");
    sub->add_flag("--verbose,-v", c.verbose, "Progress and error detail on stderr");
    sub->add_option("--threads", c.threads, "Worker threads (1 is bit-deterministic)")->check(CLI::PositiveNumber);
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { c.seed = s, seed_given = true; }, "Random seed");
  };

  // meshgen
  std::vector<double> size{32.0, 24.0, 5.0};
  std::vector<int> cells{24, 18, 4};
  double bias = 2.0;
  auto* meshgen = app.add_subcommand("meshgen", "Generate the structured gel mesh (INP)");
  meshgen->add_option("--size", size, "Box x,y,z in mm")->expected(3)->delimiter(',');
  meshgen->add_option("--cells", cells, "Cells along x,y,z")->expected(3)->delimiter(',');
  meshgen->add_option("--bias", bias, "Top-layer refinement ratio (>= 1)");
  add_common(meshgen);

  // Shared FEA inputs.
  std::string mesh_path, scene_path;
  double c10 = kGelC10, poisson = kGelPoisson;
  int increments = 5;
  auto add_fea = [&](CLI::App* sub, bool scene_required) {
    sub->add_option("--mesh", mesh_path, "Mesh INP (default: generated gel box)")->check(CLI::ExistingFile);
    auto* s = sub->add_option("--scene", scene_path, "Indenter scene JSON")->check(CLI::ExistingFile);
    if (scene_required) s->required();
    sub->add_option("--c10", c10, "Neo-Hookean C10 (MPa)");
    sub->add_option("--poisson", poisson, "Poisson ratio defining D1");
    sub->add_option("--increments", increments, "Load increments")->check(CLI::PositiveNumber);
  };
  auto* solve = app.add_subcommand("solve", "Solve an indentation scene; writes solution JSON");
  add_fea(solve, true);
  add_common(solve);
  auto* emit_inp_cmd = app.add_subcommand("emit-inp", "Write a CalculiX input deck for a scene");
  add_fea(emit_inp_cmd, true);
  add_common(emit_inp_cmd);

  std::string frd_path;
  auto* parse_frd_cmd = app.add_subcommand("parse-frd", "Parse an FRD result file; writes JSON");
  parse_frd_cmd->add_option("frd", frd_path, "FRD file")->required()->check(CLI::ExistingFile);
  add_common(parse_frd_cmd);

  std::string corr_path, model_name = "affine";
  auto* fitp = app.add_subcommand("fit-projection", "Fit a camera projection to correspondences");
  fitp->add_option("--correspondences", corr_path, "JSON list of {world, pixel}")
      ->required()
      ->check(CLI::ExistingFile);
  fitp->add_option("--model", model_name, "affine or projective");
  add_common(fitp);

  std::string solution_path, projection_path, res_str = "24x32", image_size = "240x320";
  auto* label = app.add_subcommand("label", "Bin surface forces into a force grid (FGRD)");
  label->add_option("--solution", solution_path, "Solution JSON")->check(CLI::ExistingFile);
  label->add_option("--frd", frd_path, "FRD with DISP and FORC blocks (needs --scene)")->check(CLI::ExistingFile);
  label->add_option("--projection", projection_path, "Projection JSON (default: gel box onto the image)")
      ->check(CLI::ExistingFile);
  label->add_option("--res", res_str, "Grid rows x columns, e.g. 24x32");
  label->add_option("--image-size", image_size, "Image rows x columns in pixels");
  add_fea(label, false);
  add_common(label);

  std::string meas_path;
  FitOptions fit;
  auto* calib = app.add_subcommand("calibrate", "Fit C10 to load-depth measurements");
  calib->add_option("--measurements", meas_path, "CSV with depth_mm,force_n")->required()->check(CLI::ExistingFile);
  calib->add_option("--lo", fit.lo, "Lower C10 bound");
  calib->add_option("--hi", fit.hi, "Upper C10 bound");
  calib->add_option("--budget", fit.budget, "FEA-backed objective evaluations");
  add_fea(calib, true);
  add_common(calib);

  SynthOptions synth;
  std::string synth_res = "24x32", synth_size = "240x320";
  std::vector<int> synth_cells{16, 12, 2};
  double synth_depth = -1.0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset (images, labels, manifest)");
  synth_cmd->add_option("--count,-n", synth.count, "Samples")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--res", synth_res, "Label grid rows x columns");
  synth_cmd->add_option("--image-size", synth_size, "Image rows x columns in pixels");
  synth_cmd->add_option("--cells", synth_cells, "Mesh cells along x,y,z")->expected(3)->delimiter(',');
  synth_cmd->add_option("--depth", synth_depth, "Fixed indentation depth in mm for every sample");
  synth_cmd->add_option("--val-fraction", synth.val_fraction, "Validation share of the training shapes");
  synth_cmd->add_option("--test-fraction", synth.test_fraction, "Share of samples from held-out shapes");
  add_seed(synth_cmd);
  add_common(synth_cmd);

  std::string manifest_path, config_path, weights_path, history_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (TOML)")->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "Override, e.g. train.epochs=10 (repeatable)");
  };
  auto* train_cmd = app.add_subcommand("train", "Train a U-net on a manifest; writes FTWB weights");
  train_cmd->add_option("--manifest", manifest_path, "Dataset manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--history", history_path, "Per-epoch history CSV");
  add_config(train_cmd);
  add_seed(train_cmd);
  add_common(train_cmd);

  std::string image_path, heatmap_path;
  auto* predict_cmd = app.add_subcommand("predict", "Predict a force grid (FGRD) from an image");
  predict_cmd->add_option("--weights", weights_path, "FTWB weights")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--image", image_path, "PNG or PPM image")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--heatmap", heatmap_path, "Write per-channel heatmaps (PPM or PNG)");
  add_common(predict_cmd);

  std::string split = "test";
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate weights on a manifest split; writes metrics JSON");
  eval_cmd->add_option("--weights", weights_path, "FTWB weights")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", manifest_path, "Dataset manifest")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", split, "train, val or test");
  add_common(eval_cmd);

  int runs = 300, warmup = 20;
  bool zero = false;
  auto* bench_cmd = app.add_subcommand("bench", "Time forward passes; reports mean and std per frame");
  bench_cmd->add_option("--weights", weights_path, "FTWB weights (default: seeded initialization)")
      ->check(CLI::ExistingFile);
  bench_cmd->add_flag("--zero", zero, "Use all-zero weights instead of a seeded initialization");
  bench_cmd->add_option("--runs", runs, "Timed runs")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", warmup, "Untimed warm-up runs")->check(CLI::NonNegativeNumber);
  add_config(bench_cmd);
  add_seed(bench_cmd);
  add_common(bench_cmd);

  std::vector<std::string> ablate_res{"12x16", "24x32", "48x64"};
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate one network per output resolution");
  ablate_cmd->add_option("--manifest", manifest_path, "Dataset manifest")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--res", ablate_res, "Output resolutions")->delimiter(',');
  ablate_cmd->add_option("--split", split, "Evaluation split");
  add_config(ablate_cmd);
  add_seed(ablate_cmd);
  add_common(ablate_cmd);

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help
    err << "gelforce: " << e.what() << " (see --help)\n";
    return 2;
  }

  std::ostream* log = c.verbose ? &err : nullptr;
  try {
    if (meshgen->parsed()) {
      const Mesh mesh = meshgen_box(BoxSpec{{size[0], size[1], size[2]}, {cells[0], cells[1], cells[2]}, bias});
      std::ostringstream s;
      write_inp_mesh(s, mesh);
      emit(c, out, s.str());
    } else if (solve->parsed() || emit_inp_cmd->parsed()) {
      const Mesh mesh = load_mesh(mesh_path);
      const IndenterScene scene = read_json(scene_path).get<IndenterScene>();
      const BoundaryConditions bc = tie_contact(mesh, scene);
      if (emit_inp_cmd->parsed()) {
        InpDeckOptions o;
        o.increments = increments;
        emit(c, out, emit_inp(mesh, material(c10, poisson), bc, o));
      } else {
        SolverOptions o;
        o.increments = increments;
        o.threads = c.threads;
        const Solution sol = solve_static(mesh, material(c10, poisson), bc, o);
        if (log) {
          const Vec3 f = -sol.total_reaction();
          *log << "total force on indenter (" << f.x() << ", " << f.y() << ", " << f.z() << ") N\n";
        }
        emit(c, out, solution_to_json(mesh, sol).dump() + "\n");
      }
    } else if (parse_frd_cmd->parsed()) {
      const FrdResult r = parse_frd(read_file(frd_path));
      json j;
      j["nodes"] = r.nodes.size();
      j["warnings"] = r.warnings;
      j["fields"] = json::array();
      for (const auto& f : r.fields) {
        json values = json::object();
        for (const auto& [id, v] : f.values) values[std::to_string(id)] = {v.x(), v.y(), v.z()};
        j["fields"].push_back({{"step", f.step}, {"name", f.name}, {"time", f.time}, {"values", values}});
      }
      emit(c, out, j.dump() + "\n");
    } else if (fitp->parsed()) {
      const auto corr = read_json(corr_path).get<std::vector<Correspondence>>();
      const ProjectionFit f = fit_projection(corr, camera_model_from_string(model_name));
      emit(c, out, json{{"projection", f.projection}, {"rms_px", f.rms}}.dump(2) + "\n");
    } else if (label->parsed()) {
      const Mesh mesh = load_mesh(mesh_path);
      const Resolution px = parse_resolution(image_size);
      ProjectionMatrix proj = gel_projection(default_gel_box(), px.width, px.height);
      if (!projection_path.empty()) {
        const json pj = read_json(projection_path);
        proj = (pj.contains("projection") ? pj.at("projection") : pj).get<ProjectionMatrix>();
      }
      LabelOptions lo;
      lo.resolution = parse_resolution(res_str);
      lo.image_size = Eigen::Vector2d(px.width, px.height);
      BinResult bin;
      if (!solution_path.empty() == !frd_path.empty()) throw ValidationError("label needs exactly one of --solution or --frd");
      if (!solution_path.empty()) {
        bin = make_label(mesh, solution_from_json(mesh, read_json(solution_path)), proj, lo);
      } else {
        const FrdResult r = parse_frd(read_file(frd_path));
        const NodalFieldSet* forc = nullptr;
        for (const auto& f : r.fields) {
          if (f.name == "FORC") forc = &f;
        }
        if (!forc) throw FormatError("'" + frd_path + "' has no FORC block");
        bin = make_label(mesh, forc->values, proj, lo);
      }
      for (const auto& w : bin.warnings) err << "gelforce: warning: " << w << "\n";
      save_label(require_out(c, "label"), bin.grid,
                 {{"dropped", {bin.dropped.x(), bin.dropped.y(), bin.dropped.z()}}});
      if (log) *log << "wrote " << to_string(lo.resolution) << " label to " << c.out << "\n";
    } else if (calib->parsed()) {
      std::ifstream in(meas_path);
      const auto meas = read_measurements_csv(in);
      SolverOptions o;
      o.increments = increments;
      o.threads = c.threads;
      LoadModel model(load_mesh(mesh_path), read_json(scene_path).get<IndenterScene>(), poisson, o);
      const CalibrationResult r = fit_c10(model, meas, fit);
      json j = to_json(r);
      j["fea_solves"] = model.solves();
      emit(c, out, j.dump(2) + "\n");
    } else if (synth_cmd->parsed()) {
      synth.seed = c.seed;
      synth.threads = c.threads;
      synth.resolution = parse_resolution(synth_res);
      const Resolution img = parse_resolution(synth_size);
      synth.image_height = img.height;
      synth.image_width = img.width;
      synth.mesh.subdivisions = {synth_cells[0], synth_cells[1], synth_cells[2]};
      if (synth_depth >= 0.0) synth.fixed_depth = synth_depth;
      const SynthReport r = synth_dataset(require_out(c, "synth"), synth);
      for (const auto& line : r.log) {
        if (log) *log << line << "\n";
      }
      err << "gelforce: synth wrote " << r.records.size() << " samples (" << r.rejected << " rejected draws, "
          << r.failed << " solver failures)\n";
    } else if (train_cmd->parsed()) {
      RunConfig cfg = run_config(config_path, overrides, c, seed_given);
      const Manifest m = load_manifest(manifest_path);
      const auto train_set = load_split(m, "train", cfg.unet.output);
      auto val_set = load_split(m, "val", cfg.unet.output);
      if (val_set.empty()) val_set = train_set;
      check_images(cfg.unet, train_set);
      check_images(cfg.unet, val_set);
      const auto tr = nn::train(train_set, val_set, cfg.unet, cfg.train, [&](const nn::EpochRecord& e) {
        if (log) {
          *log << "epoch " << e.epoch << " loss " << e.train_loss << " val_mae " << e.val_mae << " lr "
               << e.learning_rate << "\n";
        }
      });
      nn::save_weights(require_out(c, "train"), tr.params);
      if (!history_path.empty()) {
        std::ofstream h(history_path);
        h << nn::history_csv(tr.history);
      }
      err << "gelforce: trained " << tr.steps << " steps, best epoch " << tr.best_epoch << " (val total-force MAE "
          << tr.best_val_mae << " N), config digest " << config_digest(cfg) << "\n";
    } else if (predict_cmd->parsed()) {
      const auto p = nn::load_weights(weights_path);
      const Image img = read_image(image_path);
      if (img.width != p.config.input_width || img.height != p.config.input_height) {
        throw ValidationError("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                              " but the network expects " + std::to_string(p.config.input_width) + "x" +
                              std::to_string(p.config.input_height));
      }
      ForceGrid g = nn::predict(p, img);
      g.sample_id = fs::path(image_path).stem().string();
      save_label(require_out(c, "predict"), g);
      if (!heatmap_path.empty()) write_image(heatmap_path, heatmap(g, 10));
      if (log) {
        const Vec3 t = g.total();
        *log << g.height() << "x" << g.width() << "x3 grid, total (" << t.x() << ", " << t.y() << ", " << t.z()
             << ") N\n";
      }
    } else if (eval_cmd->parsed()) {
      const auto p = nn::load_weights(weights_path);
      const Manifest m = load_manifest(manifest_path);
      const auto samples = load_split(m, split, p.config.output);
      check_images(p.config, samples);
      std::vector<ForceGrid> preds, labels;
      for (const auto& s : samples) {
        preds.push_back(nn::predict(p, s.image));
        labels.push_back(s.label);
      }
      // The weights carry the network configuration only; digest it.
      RunConfig rc;
      rc.unet = p.config;
      json j = to_json(evaluate(preds, labels, config_digest(rc)));
      j["split"] = split;
      emit(c, out, j.dump(2) + "\n");
    } else if (bench_cmd->parsed()) {
      nn::UNetParams<float> p;
      if (!weights_path.empty()) {
        p = nn::load_weights(weights_path);
      } else {
        const RunConfig cfg = run_config(config_path, overrides, c, seed_given);
        p = zero ? nn::zero_unet<float>(cfg.unet) : nn::init_unet<float>(cfg.unet, cfg.train.seed);
      }
      const json j = bench(p, runs, warmup, c.seed);
      err << "gelforce: forward pass " << j.at("mean_ms").get<double>() << " +- " << j.at("std_ms").get<double>()
          << " ms over " << runs << " runs\n";
      emit(c, out, j.dump() + "\n");
    } else if (ablate_cmd->parsed()) {
      AblationOptions o;
      o.base = run_config(config_path, overrides, c, seed_given);
      o.resolutions.clear();
      for (const auto& r : ablate_res) o.resolutions.push_back(parse_resolution(r));
      o.eval_split = split;
      const json j = run_ablation(load_manifest(manifest_path), o, &err);
      emit(c, out, j.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    err << "gelforce: error: " << e.what() << "\n";
    if (c.verbose) {
      err << "gelforce: while running '" << app.get_subcommands().front()->get_name() << "'";
      for (std::size_t i = 1; i < args.size(); ++i) err << " " << args[i];
      err << "\n";
    }
    return 1;
  }
  return 0;
}

}  // namespace gelforce::cli
