// Command-line pipeline driver: case inspection, dataset generation, ICNN /
// DNN training, gap evaluation, generalization certificates, and formulation
// export. Exit codes: 0 ok, 2 input error, 3 empty result, 4 numerical
// failure, 64 usage. All randomness flows from explicit --seed flags.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opfvf/ac_opf.hpp"
#include "opfvf/case_parser.hpp"
#include "opfvf/certify.hpp"
#include "opfvf/dataset.hpp"
#include "opfvf/dc_opf.hpp"
#include "opfvf/evalkit.hpp"
#include "opfvf/icnn.hpp"
#include "opfvf/manifest.hpp"
#include "opfvf/soc_opf.hpp"
#include "opfvf/trainer.hpp"
#include "opfvf/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitUsage = 64;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

opfvf::PowerNetwork load_network(const std::string& path) {
  std::vector<std::string> warnings;
  opfvf::PowerNetwork net = opfvf::parse_case(opfvf::read_text_file(path), &warnings);
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const auto violations = opfvf::validate(net);
  if (!violations.empty()) {
    for (const auto& v : violations)
      std::fprintf(stderr, "invalid case: [%s] %s\n", v.code.c_str(), v.detail.c_str());
    throw opfvf::CaseParseError("case fails validation", 0);
  }
  return net;
}

std::string canonical_command(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

// plain-text key=value training config; keys match the TrainConfig fields
opfvf::TrainConfig parse_train_config(const std::string& path) {
  opfvf::TrainConfig cfg;
  const std::string text = opfvf::read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": expected key=value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "optimizer") {
        if (value == "sgd-momentum")
          cfg.optimizer = opfvf::Optimizer::SgdMomentum;
        else if (value == "adaptive-moments")
          cfg.optimizer = opfvf::Optimizer::AdaptiveMoments;
        else
          throw std::invalid_argument("unknown optimizer '" + value + "'");
      } else if (key == "learning_rate") {
        cfg.learning_rate = std::stod(value);
      } else if (key == "momentum") {
        cfg.momentum = std::stod(value);
      } else if (key == "beta1") {
        cfg.beta1 = std::stod(value);
      } else if (key == "beta2") {
        cfg.beta2 = std::stod(value);
      } else if (key == "adam_eps") {
        cfg.adam_eps = std::stod(value);
      } else if (key == "batch_size") {
        cfg.batch_size = std::stoi(value);
      } else if (key == "max_epochs") {
        cfg.max_epochs = std::stoi(value);
      } else if (key == "lr_decay") {
        cfg.lr_decay = std::stod(value);
      } else if (key == "plateau_patience") {
        cfg.plateau_patience = std::stoi(value);
      } else if (key == "plateau_factor") {
        cfg.plateau_factor = std::stod(value);
      } else if (key == "early_stop_patience") {
        cfg.early_stop_patience = std::stoi(value);
      } else if (key == "kappa_under") {
        cfg.loss.kappa_under = std::stod(value);
      } else if (key == "kappa_over") {
        cfg.loss.kappa_over = std::stod(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "projection") {
        if (value == "project")
          cfg.projection = opfvf::ProjectionMode::ProjectWeights;
        else if (value == "mask")
          cfg.projection = opfvf::ProjectionMode::MaskGradients;
        else
          throw std::invalid_argument("unknown projection mode '" + value + "'");
      } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad value for " +
                                  key);
    }
  }
  return cfg;
}

opfvf::EnvelopePair dataset_supports(const opfvf::Dataset& ds, opfvf::Split split) {
  opfvf::EnvelopePair env;
  for (const auto& s : ds.samples) {
    if (s.split != split || !s.labeled) continue;
    const auto b = s.input();
    opfvf::SupportPoint p;
    p.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<long>(b.size()));
    p.value = s.z;
    p.grad = Eigen::Map<const Eigen::VectorXd>(s.y.data(), static_cast<long>(s.y.size()));
    env.points.push_back(std::move(p));
  }
  return env;
}

// --- subcommand handlers ---

int run_case_inspect(const std::string& case_file) {
  try {
    const opfvf::PowerNetwork net = load_network(case_file);
    std::printf("case:        %s\n", net.name.c_str());
    std::printf("buses:       %zu\n", net.num_buses());
    std::printf("branches:    %zu\n", net.num_branches());
    std::printf("generators:  %zu\n", net.num_generators());
    std::printf("ref load:    %.4f p.u. (%.1f MW)\n", net.total_pd_ref(),
                net.total_pd_ref() * net.base_mva);
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}

int run_dataset_generate(const std::string& case_file, std::size_t count, double alpha_min,
                         double alpha_max, double eta_std, std::uint64_t seed,
                         const std::string& out) {
  Timer timer;
  opfvf::PerturbationConfig cfg;
  cfg.alpha_min = alpha_min;
  cfg.alpha_max = alpha_max;
  cfg.eta_std = eta_std;
  cfg.base_seed = seed;
  cfg.count = count;
  try {
    cfg.check_valid();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  }
  try {
    const opfvf::PowerNetwork net = load_network(case_file);
    const opfvf::Dataset ds = opfvf::generate(net, cfg);
    opfvf::save_dataset(ds, out);

    const std::size_t feasible = ds.samples.size() - ds.count_split(opfvf::Split::Excluded);
    std::printf("instances:   %zu\n", ds.samples.size());
    std::printf("feasible:    %zu\n", feasible);
    std::printf("infeasible:  %zu\n", ds.samples.size() - feasible);
    std::printf("split:       %zu/%zu/%zu\n", ds.count_split(opfvf::Split::Train),
                ds.count_split(opfvf::Split::Valid), ds.count_split(opfvf::Split::Test));

    opfvf::RunManifest man;
    man.command = canonical_command({"dataset", "generate", "--case", case_file, "--count",
                                     std::to_string(count), "--alpha-min",
                                     opfvf::format_double(alpha_min), "--alpha-max",
                                     opfvf::format_double(alpha_max), "--eta-std",
                                     opfvf::format_double(eta_std), "--seed", std::to_string(seed),
                                     "--out", out});
    man.config_hash = ds.config_hash;
    man.seeds = {seed};
    man.inputs = {case_file};
    man.outputs = {out};
    man.wall_time_ms = timer.ms();
    opfvf::write_manifest(man, out + ".manifest.json");
    return kExitOk;
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).find("infeasible") != std::string::npos) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitEmpty;
    }
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}

int run_train(const std::string& dataset_path, const std::string& arch,
              const std::vector<int>& widths, const std::string& config_path,
              std::uint64_t seed, bool seed_given, const std::string& out) {
  Timer timer;
  if (arch != "icnn" && arch != "dnn") {
    std::fprintf(stderr, "usage error: --arch must be icnn or dnn\n");
    return kExitUsage;
  }
  opfvf::TrainConfig cfg;
  try {
    if (!config_path.empty()) cfg = parse_train_config(config_path);
    if (seed_given) cfg.seed = seed;
    cfg.check_valid();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }

  try {
    const opfvf::Dataset ds = opfvf::load_dataset(dataset_path);
    opfvf::NetConfig net_cfg;
    net_cfg.input_dim = static_cast<int>(ds.input_dim());
    net_cfg.hidden = widths;
    net_cfg.convex = arch == "icnn";
    net_cfg.seed = cfg.seed;

    opfvf::TrainOutput result = opfvf::train(opfvf::init(net_cfg), ds, cfg);
    if (result.report.diverged) {
      opfvf::write_text_file(out + ".train.csv", result.report.csv());
      std::fprintf(stderr, "error: training diverged (see %s.train.csv)\n", out.c_str());
      return kExitNumerical;
    }

    opfvf::save_model(result.model, out);
    opfvf::write_text_file(out + ".train.csv", result.report.csv());

    std::printf("arch:        %s\n", arch.c_str());
    std::printf("epochs:      %zu (best %d, %s)\n", result.report.epochs.size(),
                result.report.best_epoch, result.report.stop_reason.c_str());
    std::printf("valid loss:  %.6g (normalized)\n", result.report.best_valid_loss);
    std::printf("convex:      %s\n", result.model.cfg.convex ? "yes (attested)" : "no");

    std::string widths_str;
    for (int w : widths) widths_str += (widths_str.empty() ? "" : ",") + std::to_string(w);
    opfvf::RunManifest man;
    man.command = canonical_command({"train", "--dataset", dataset_path, "--arch", arch,
                                     "--widths", widths_str, "--config",
                                     config_path.empty() ? "-" : config_path, "--out", out});
    man.config_hash = opfvf::hex64(opfvf::fnv1a(man.command));
    man.seeds = {cfg.seed};
    man.inputs = {dataset_path};
    if (!config_path.empty()) man.inputs.push_back(config_path);
    man.outputs = {out, out + ".train.csv"};
    man.wall_time_ms = timer.ms();
    opfvf::write_manifest(man, out + ".manifest.json");
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}

int run_eval(const std::string& model_path, const std::string& baseline_path,
             const std::string& dataset_path, const std::string& out_dir) {
  Timer timer;
  try {
    const opfvf::Dataset ds = opfvf::load_dataset(dataset_path);
    const opfvf::IcnnModel model = opfvf::load_model(model_path);
    std::vector<opfvf::EvalResult> results;
    results.push_back(opfvf::evaluate(model, ds, opfvf::Split::Test,
                                      model.cfg.convex ? "icnn" : "dnn"));
    if (!baseline_path.empty()) {
      const opfvf::IcnnModel baseline = opfvf::load_model(baseline_path);
      std::string label = baseline.cfg.convex ? "icnn" : "dnn";
      if (label == results.front().summary.model_label) label += "2";
      results.push_back(opfvf::evaluate(baseline, ds, opfvf::Split::Test, label));
    }
    std::filesystem::create_directories(out_dir);
    opfvf::render_report(results, out_dir);

    for (const auto& r : results)
      std::printf("%-6s mean gap %.4f%%  worst gap %.4f%%  (%zu samples)\n",
                  r.summary.model_label.c_str(), 100.0 * r.summary.geo_mean_gap,
                  100.0 * r.summary.worst_gap, r.summary.count);

    opfvf::RunManifest man;
    man.command = canonical_command({"eval", "--model", model_path, "--baseline",
                                     baseline_path.empty() ? "-" : baseline_path, "--dataset",
                                     dataset_path, "--out", out_dir});
    man.config_hash = opfvf::hex64(opfvf::fnv1a(man.command));
    man.inputs = {model_path, dataset_path};
    if (!baseline_path.empty()) man.inputs.push_back(baseline_path);
    man.outputs = {out_dir + "/report.md", out_dir + "/gaps.csv", out_dir + "/hist.svg",
                   out_dir + "/scatter.svg"};
    man.wall_time_ms = timer.ms();
    opfvf::write_manifest(man, out_dir + "/manifest.json");
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}

int run_certify(const std::string& model_path, const std::string& dataset_path, int theorem,
                std::size_t samples, bool exact_1d, double fit_tol, std::uint64_t seed,
                const std::string& split_name, const std::string& out) {
  Timer timer;
  if (theorem != 1 && theorem != 2) {
    std::fprintf(stderr, "usage error: --theorem must be 1 or 2\n");
    return kExitUsage;
  }
  if (theorem == 1 && samples == 0 && !exact_1d) {
    std::fprintf(stderr, "usage error: --samples must be positive in sampled mode\n");
    return kExitUsage;
  }
  opfvf::Split split;
  try {
    split = opfvf::split_from_string(split_name);
  } catch (const std::exception&) {
    std::fprintf(stderr, "usage error: --split must be train|valid|test\n");
    return kExitUsage;
  }

  try {
    const opfvf::Dataset ds = opfvf::load_dataset(dataset_path);
    const opfvf::IcnnModel model = opfvf::load_model(model_path);
    const opfvf::EnvelopePair phi_data = dataset_supports(ds, split);
    if (phi_data.points.empty()) {
      std::fprintf(stderr, "error: no labeled samples in the %s split\n", split_name.c_str());
      return kExitEmpty;
    }
    if (static_cast<int>(ds.input_dim()) != model.cfg.input_dim) {
      std::fprintf(stderr, "error: model input dimension does not match the dataset\n");
      return kExitInput;
    }

    opfvf::BoundCertificate cert;
    if (theorem == 1) {
      std::vector<Eigen::VectorXd> inputs;
      for (const auto& p : phi_data.points) inputs.push_back(p.b);
      const opfvf::EnvelopePair f_data = opfvf::model_support_data(model, inputs);
      cert = opfvf::theorem1_bound(f_data, phi_data, samples, seed, exact_1d);
    } else {
      cert = opfvf::theorem2_bound(phi_data, model, fit_tol);
    }
    cert.provenance = ds.case_name + "/" + ds.formulation + "/" + split_name;
    opfvf::save_certificate(cert, out);

    std::printf("kind:            %s\n", to_string(cert.kind));
    std::printf("bound:           %.6g\n", cert.bound);
    std::printf("fit residuals:   value %.3g, gradient %.3g\n", cert.fit_residual_value,
                cert.fit_residual_grad);
    if (theorem == 2) {
      std::printf("diameter:        %.6g (%s)\n", cert.diameter, cert.diameter_mode.c_str());
      if (!cert.binding)
        std::printf("*** NON-BINDING: fit residuals exceed fit-tol %.3g; "
                    "the bound does not certify this model ***\n",
                    fit_tol);
    }

    opfvf::RunManifest man;
    man.command = canonical_command(
        {"certify", "--model", model_path, "--dataset", dataset_path, "--theorem",
         std::to_string(theorem), "--samples", std::to_string(samples), exact_1d ? "--exact-1d" : "",
         "--split", split_name, "--out", out});
    man.config_hash = opfvf::hex64(opfvf::fnv1a(man.command));
    man.seeds = {seed};
    man.inputs = {model_path, dataset_path};
    man.outputs = {out};
    man.wall_time_ms = timer.ms();
    opfvf::write_manifest(man, out + ".manifest.json");
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}

int run_export(const std::string& case_file, const std::string& kind,
               const std::string& loads_path, const std::string& out) {
  Timer timer;
  if (kind != "dc" && kind != "soc" && kind != "ac") {
    std::fprintf(stderr, "usage error: --kind must be dc, soc or ac\n");
    return kExitUsage;
  }
  try {
    const opfvf::PowerNetwork net = load_network(case_file);
    std::vector<double> pd = net.pd_ref, qd = net.qd_ref;
    if (!loads_path.empty()) {
      const auto j = opfvf::parse_json(opfvf::read_text_file(loads_path), "loads");
      pd = opfvf::require_double_array(j, "pd", "loads");
      if (j.contains("qd") && !j["qd"].is_null())
        qd = opfvf::require_double_array(j, "qd", "loads");
    }
    opfvf::OpfDescription desc;
    if (kind == "dc")
      desc = opfvf::build_dc_description(net, pd);
    else if (kind == "soc")
      desc = opfvf::build_soc(net, pd, qd);
    else
      desc = opfvf::build_ac(net, pd, qd);
    opfvf::export_formulation_file(desc, out);
    std::printf("formulation: %s\n", desc.formulation.c_str());
    std::printf("variables:   %zu groups\n", desc.variables.size());
    std::printf("constraints: %zu blocks\n", desc.constraints.size());

    opfvf::RunManifest man;
    man.command = canonical_command({"export-formulation", "--case", case_file, "--kind", kind,
                                     "--loads", loads_path.empty() ? "-" : loads_path, "--out",
                                     out});
    man.config_hash = opfvf::hex64(opfvf::fnv1a(man.command));
    man.inputs = {case_file};
    if (!loads_path.empty()) man.inputs.push_back(loads_path);
    man.outputs = {out};
    man.wall_time_ms = timer.ms();
    opfvf::write_manifest(man, out + ".manifest.json");
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"OPF value-function learning toolkit"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads (the pipeline is single-threaded; "
                                       "1 is the reproducibility contract)")
      ->check(CLI::PositiveNumber);

  // case inspect
  auto* case_cmd = app.add_subcommand("case", "case-file utilities");
  case_cmd->require_subcommand(1);
  auto* inspect = case_cmd->add_subcommand("inspect", "print case statistics");
  std::string inspect_file;
  inspect->add_option("case-file", inspect_file, "MATPOWER case file")->required();

  // dataset generate
  auto* dataset_cmd = app.add_subcommand("dataset", "dataset pipeline");
  dataset_cmd->require_subcommand(1);
  auto* gen = dataset_cmd->add_subcommand("generate", "sample, solve and label DC instances");
  std::string gen_case, gen_out;
  std::size_t gen_count = 1000;
  double gen_alpha_min = 0.80, gen_alpha_max = 1.065, gen_eta = 0.05;
  std::uint64_t gen_seed = 0;
  gen->add_option("--case", gen_case)->required();
  gen->add_option("--count", gen_count)->required();
  gen->add_option("--alpha-min", gen_alpha_min);
  gen->add_option("--alpha-max", gen_alpha_max);
  gen->add_option("--eta-std", gen_eta);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train an ICNN or DNN on a dataset");
  std::string train_dataset, train_arch = "icnn", train_config, train_out;
  std::vector<int> train_widths = {64, 64};
  std::uint64_t train_seed = 0;
  train_cmd->add_option("--dataset", train_dataset)->required();
  train_cmd->add_option("--arch", train_arch, "icnn|dnn");
  train_cmd->add_option("--widths", train_widths)->delimiter(',');
  train_cmd->add_option("--config", train_config, "key=value training config");
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed);
  train_cmd->add_option("--out", train_out)->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "optimality-gap report on the test split");
  std::string eval_model, eval_baseline, eval_dataset, eval_out;
  eval_cmd->add_option("--model", eval_model)->required();
  eval_cmd->add_option("--baseline", eval_baseline);
  eval_cmd->add_option("--dataset", eval_dataset)->required();
  eval_cmd->add_option("--out", eval_out)->required();

  // certify
  auto* cert_cmd = app.add_subcommand("certify", "generalization certificates");
  std::string cert_model, cert_dataset, cert_out, cert_split = "train";
  int cert_theorem = 1;
  std::size_t cert_samples = 1000;
  bool cert_exact = false;
  double cert_fit_tol = 1e-6;
  std::uint64_t cert_seed = 0;
  cert_cmd->add_option("--model", cert_model)->required();
  cert_cmd->add_option("--dataset", cert_dataset)->required();
  cert_cmd->add_option("--theorem", cert_theorem, "1 (envelope) or 2 (perfect fit)");
  cert_cmd->add_option("--samples", cert_samples);
  cert_cmd->add_flag("--exact-1d", cert_exact);
  cert_cmd->add_option("--fit-tol", cert_fit_tol);
  cert_cmd->add_option("--seed", cert_seed);
  cert_cmd->add_option("--split", cert_split, "train|valid|test");
  cert_cmd->add_option("--out", cert_out)->required();

  // export-formulation
  auto* export_cmd = app.add_subcommand("export-formulation", "portable formulation files");
  std::string exp_case, exp_kind, exp_loads, exp_out;
  export_cmd->add_option("--case", exp_case)->required();
  export_cmd->add_option("--kind", exp_kind, "dc|soc|ac")->required();
  export_cmd->add_option("--loads", exp_loads, "JSON file with pd (and qd) arrays");
  export_cmd->add_option("--out", exp_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (inspect->parsed()) return run_case_inspect(inspect_file);
  if (gen->parsed())
    return run_dataset_generate(gen_case, gen_count, gen_alpha_min, gen_alpha_max, gen_eta,
                                gen_seed, gen_out);
  if (train_cmd->parsed())
    return run_train(train_dataset, train_arch, train_widths, train_config, train_seed,
                     train_seed_opt->count() > 0, train_out);
  if (eval_cmd->parsed()) return run_eval(eval_model, eval_baseline, eval_dataset, eval_out);
  if (cert_cmd->parsed())
    return run_certify(cert_model, cert_dataset, cert_theorem, cert_samples, cert_exact,
                       cert_fit_tol, cert_seed, cert_split, cert_out);
  if (export_cmd->parsed()) return run_export(exp_case, exp_kind, exp_loads, exp_out);
  return kExitUsage;
}
