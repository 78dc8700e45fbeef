#include "pecnet/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pecnet/dataset_csv.hpp"
#include "pecnet/errors.hpp"
#include "pecnet/eval.hpp"
#include "pecnet/generator.hpp"
#include "pecnet/model.hpp"
#include "pecnet/run_config.hpp"
#include "pecnet/scenarios.hpp"

namespace fs = std::filesystem;

namespace pecnet {

namespace {

struct KeySpec {
  std::string key;
  std::string help;
  bool flag = false;  // boolean switch on the command line
};

const std::vector<KeySpec> kCommonKeys = {
    {"config", "key=value settings file"},
    {"seed", "seed for every random choice (default 0)"},
    {"out", "output directory (default .)"},
};

const std::vector<KeySpec> kGenerateKeys = {
    {"scenario", "specimen-a | specimen-b | custom"},
    {"per-class", "signals per class, split half/half (default 200)"},
    {"length", "time steps per signal (default 100)"},
    {"noise", "white-noise standard deviation (default 0.01)"},
    {"airgap", "apply the airgap transform", true},
    {"bot-depths", "custom: comma-separated BOT depths in mm"},
    {"tob-depths", "custom: comma-separated TOB depths in mm"},
    {"loss-free", "custom: include a loss-free class (default true)"},
    {"height", "specimen-b: section height (default 48)"},
    {"width", "specimen-b: section width (default 80)"},
    {"liftoff", "specimen-b: lift-off amplitude jitter (default 0.05)"},
    {"rivet-threshold", "specimen-b: rivet threshold (default 0.05)"},
    {"rivet-dilation", "specimen-b: rivet dilation size (default 12)"},
};

const std::vector<KeySpec> kArchitectureKeys = {
    {"block1-kernels", "kernels per conv in block 1 (default 128)"},
    {"block1-width", "kernel width in block 1 (default 3)"},
    {"block1-count", "convs in block 1 (default 2)"},
    {"pool", "max-pool size (default 3)"},
    {"block2-kernels", "kernels per conv in block 2 (default 64)"},
    {"block2-width", "kernel width in block 2 (default 3)"},
    {"block2-count", "convs in block 2 (default 2)"},
    {"hidden", "regression hidden units (default 32)"},
};

const std::vector<KeySpec> kTrainKeys = {
    {"train", "training dataset CSV (default <out>/train.csv)"},
    {"test", "optional test dataset CSV"},
    {"model", "model output path (default <out>/model.pecn)"},
    {"history", "history CSV path (default <out>/history.csv)"},
    {"epochs", "training epochs (default 500)"},
    {"batch-size", "mini-batch size (default 32)"},
    {"alpha", "classification loss weight (default 1)"},
    {"beta", "regression loss weight (default 1)"},
    {"lr", "Adam learning rate (default 0.001)"},
    {"beta1", "Adam beta1 (default 0.9)"},
    {"beta2", "Adam beta2 (default 0.999)"},
    {"epsilon", "Adam epsilon (default 1e-8)"},
    {"label-scale", "depth label multiplier (default 10)"},
    {"no-shuffle", "keep sample order fixed", true},
    {"metrics-every", "evaluate full-set metrics every N epochs (default 1)"},
};

const std::vector<KeySpec> kEvalKeys = {
    {"model", "trained model (default <out>/model.pecn)"},
    {"data", "dataset CSV to evaluate (default <out>/test.csv)"},
    {"baselines", "also fit OLS, ridge and nearest-centroid baselines", true},
    {"train", "dataset the baselines are fitted on (default <out>/train.csv)"},
    {"ridge-lambda", "ridge penalty (default 1.0)"},
};

const std::vector<KeySpec> kPredictKeys = {
    {"model", "trained model (default <out>/model.pecn)"},
    {"data", "input dataset CSV"},
    {"predictions", "output CSV (default <out>/predictions.csv)"},
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

fs::path out_dir(const RunConfig& c) { return fs::path(c.get_string("out", ".")); }

fs::path path_or(const RunConfig& c, const std::string& key, const std::string& default_name) {
  return c.has(key) ? fs::path(c.get_string(key, "")) : out_dir(c) / default_name;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    RunConfig one;
    one.set(key, item.substr(item.find_first_not_of(' ') == std::string::npos ? 0 : item.find_first_not_of(' ')));
    if (one.get_string(key, "").empty()) continue;
    out.push_back(one.get_double(key, 0.0));
  }
  return out;
}

void write_class_map(const std::vector<FlawSpec>& specs, const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "class,layer,depth_mm,airgap\n";
  for (std::size_t i = 0; i < specs.size(); ++i)
    os << i << ',' << to_string(specs[i].layer) << ',' << specs[i].depth_mm << ',' << (specs[i].airgap ? 1 : 0)
       << '\n';
}

// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& c, std::ostream& out) {
  const std::string scenario = c.get_string("scenario", "specimen-a");
  const std::uint64_t seed = c.get_u64("seed", 0);
  const fs::path dir = out_dir(c);
  const std::size_t length = c.get_size("length", 100);
  const double noise = c.get_double("noise", 0.01);

  if (scenario == "specimen-a" || scenario == "custom") {
    const std::size_t per_class = c.get_size("per-class", 200);
    if (per_class == 0 || per_class % 2 != 0) throw UsageError("--per-class must be a positive even number");
    std::vector<FlawSpec> specs;
    const bool airgap = c.get_bool("airgap", false);
    if (scenario == "specimen-a") {
      specs = scenarios::specimen_a_classes(airgap);
    } else {
      if (c.get_bool("loss-free", true)) specs.push_back({FlawLayer::kNone, 0.0, airgap});
      for (double d : parse_list("bot-depths", c.get_string("bot-depths", "")))
        specs.push_back({FlawLayer::kBot, d, airgap});
      for (double d : parse_list("tob-depths", c.get_string("tob-depths", "")))
        specs.push_back({FlawLayer::kTob, d, airgap});
      if (specs.size() < 2) throw UsageError("custom scenario needs at least two classes");
    }
    Dataset train_set, test_set;
    if (scenario == "specimen-a") {
      scenarios::SpecimenAOptions o;
      o.per_class = per_class;
      o.signal_length = length;
      o.noise_sigma = noise;
      o.airgap = airgap;
      o.seed = seed;
      std::tie(train_set, test_set) = scenarios::specimen_a(o);
    } else {
      const ScanGrid grid = generate_synthetic(specs, per_class, length, noise, seed);
      std::tie(train_set, test_set) = split_specimen_a(to_dataset(grid), seed + 1);
    }
    ensure_dir(dir);
    save_csv(train_set, dir / "train.csv");
    save_csv(test_set, dir / "test.csv");
    write_class_map(specs, dir / "classes.csv");
    out << "wrote " << train_set.size() << " training and " << test_set.size() << " test signals ("
        << specs.size() << " classes) to " << dir.string() << '\n';
    return 0;
  }
  if (scenario == "specimen-b") {
    scenarios::SpecimenBOptions o;
    o.height = c.get_size("height", o.height);
    o.width = c.get_size("width", o.width);
    o.signal_length = length;
    o.noise_sigma = noise;
    o.liftoff_sigma = c.get_double("liftoff", o.liftoff_sigma);
    o.rivet_threshold = c.get_double("rivet-threshold", o.rivet_threshold);
    o.rivet_dilation = c.get_int("rivet-dilation", o.rivet_dilation);
    o.seed = seed;
    if (o.height == 0 || o.width == 0) throw UsageError("--height and --width must be positive");
    const auto [train_grid, test_grid] = scenarios::specimen_b(o);
    const Dataset train_set = to_dataset(train_grid), test_set = to_dataset(test_grid);
    ensure_dir(dir);
    save_csv(train_set, dir / "train.csv");
    save_csv(test_set, dir / "test.csv");
    out << "wrote sections of " << o.height << "x" << o.width << " (" << usable_records(train_set).size() << " / "
        << usable_records(test_set).size() << " usable after rivet removal) to " << dir.string() << '\n';
    return 0;
  }
  throw UsageError("unknown scenario '" + scenario + "' (expected specimen-a, specimen-b or custom)");
}

ModelConfig model_config_from(const RunConfig& c, const Dataset& data, bool classify, bool regress) {
  ModelConfig m;
  m.signal_length = data.signal_length;
  m.block1 = {c.get_size("block1-kernels", 128), c.get_size("block1-width", 3), c.get_size("block1-count", 2)};
  m.pool_size = c.get_size("pool", 3);
  m.block2 = {c.get_size("block2-kernels", 64), c.get_size("block2-width", 3), c.get_size("block2-count", 2)};
  m.regression_hidden_units = c.get_size("hidden", 32);
  m.classification_classes = classify ? data.num_classes : 0;
  m.regression_outputs = regress ? data.depth_outputs() : 0;
  return m;
}

void print_metric(std::ostream& out, const char* name, const std::optional<double>& v) {
  if (v) out << name << '=' << std::setprecision(17) << *v << '\n';
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  const fs::path train_path = path_or(c, "train", "train.csv");
  const Dataset raw_train = usable_records(load_csv(train_path));
  std::optional<Dataset> raw_test;
  if (c.has("test")) raw_test = usable_records(load_csv(c.get_string("test", "")));

  TrainConfig tc;
  tc.epochs = c.get_size("epochs", 500);
  tc.batch_size = c.get_size("batch-size", 32);
  tc.loss_weights = LossWeights(c.get_double("alpha", 1.0), c.get_double("beta", 1.0));
  tc.adam.learning_rate = c.get_double("lr", 0.001);
  tc.adam.beta1 = c.get_double("beta1", 0.9);
  tc.adam.beta2 = c.get_double("beta2", 0.999);
  tc.adam.epsilon = c.get_double("epsilon", 1e-8);
  tc.seed = c.get_u64("seed", 0);
  tc.shuffle = !c.get_bool("no-shuffle", false);
  tc.metrics_every = c.get_size("metrics-every", 1);
  tc.validate();

  const bool classify = tc.loss_weights.alpha > 0.0;
  const bool regress = tc.loss_weights.beta > 0.0;
  if (classify && (!raw_train.has_class_labels() || raw_train.num_classes < 2)) {
    throw DataError("alpha > 0 but the training set has no class labels");
  }
  if (regress && !raw_train.has_depth_labels()) {
    throw DataError("beta > 0 but the training set has no depth labels");
  }

  const double scale = c.get_double("label-scale", 10.0);
  const Dataset train_set = scale_labels(raw_train, scale);
  std::optional<Dataset> test_set;
  if (raw_test) test_set = scale_labels(*raw_test, scale);

  Model model = Model::build(model_config_from(c, train_set, classify, regress), tc.seed);
  const TrainingHistory history = train(model, train_set, test_set ? &*test_set : nullptr, tc);

  const fs::path model_path = path_or(c, "model", "model.pecn");
  const fs::path history_path = path_or(c, "history", "history.csv");
  if (model_path.has_parent_path()) ensure_dir(model_path.parent_path());
  if (history_path.has_parent_path()) ensure_dir(history_path.parent_path());
  save_model(model, model_path);
  {
    std::ofstream os(history_path, std::ios::trunc);
    if (!os) throw IoError("cannot write '" + history_path.string() + "'");
    history.write_csv(os);
  }

  const EpochRecord& last = history.epochs.back();
  out << "epochs=" << history.epochs.size() << '\n';
  out << "final_train_loss=" << std::setprecision(17) << last.train_loss << '\n';
  print_metric(out, "final_train_acc", last.train_acc);
  print_metric(out, "final_test_acc", last.test_acc);
  print_metric(out, "final_train_mse", last.train_mse);
  print_metric(out, "final_test_mse", last.test_mse);
  return 0;
}

void check_compatible(const Model& model, const Dataset& data) {
  if (data.signal_length != model.config().signal_length) {
    throw ShapeError("dataset T=" + std::to_string(data.signal_length) + " but model expects T=" +
                     std::to_string(model.config().signal_length));
  }
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  const Model model = load_model(path_or(c, "model", "model.pecn"));
  const Dataset raw = usable_records(load_csv(path_or(c, "data", "test.csv")));
  check_compatible(model, raw);
  const Dataset data = scale_labels(raw, model.label_scale());
  const EvalReport report = evaluate(model, data);

  const fs::path dir = out_dir(c);
  ensure_dir(dir);
  std::ostringstream text;
  text << "samples=" << data.size() << '\n';
  text << "label_scale=" << std::setprecision(17) << model.label_scale() << '\n';
  report.write_text(text, "model.");

  if (c.get_bool("baselines", false)) {
    const Dataset base_train = scale_labels(usable_records(load_csv(path_or(c, "train", "train.csv"))), model.label_scale());
    check_compatible(model, base_train);
    const Tensor x_train = feature_matrix(base_train);
    const Tensor x_eval = feature_matrix(data);
    const auto old = text.precision(17);
    if (model.config().has_classifier() && base_train.has_class_labels() && data.has_class_labels()) {
      const std::size_t classes = std::max(base_train.num_classes, data.num_classes);
      const NearestCentroid nc = NearestCentroid::fit(x_train, class_labels(base_train), classes);
      text << "nearest_centroid.accuracy=" << accuracy(nc.classify_all(x_eval), class_labels(data)) << '\n';
    }
    if (model.config().has_regressor() && base_train.has_depth_labels() && data.has_depth_labels()) {
      const std::size_t outputs = model.config().regression_outputs;
      const Tensor y_train = depth_matrix(base_train), y_eval = depth_matrix(data);
      const double lambda = c.get_double("ridge-lambda", 1.0);
      for (const auto& [name, lam] : {std::pair<std::string, double>{"ols", 0.0}, {"ridge", lambda}}) {
        Tensor pred({data.size(), outputs}), target({data.size(), outputs});
        try {
          for (std::size_t j = 0; j < outputs; ++j) {
            Tensor yj({base_train.size()});
            for (std::size_t i = 0; i < base_train.size(); ++i) yj[i] = y_train.at(i, j);
            const Tensor pj = fit_ridge(x_train, yj, lam).predict(x_eval);
            for (std::size_t i = 0; i < data.size(); ++i) {
              pred.at(i, j) = pj[i];
              target.at(i, j) = y_eval.at(i, j);
            }
          }
        } catch (const RankError&) {
          // Fewer samples than features, say; the other rows still stand.
          text << name << ".status=rank-deficient\n";
          continue;
        }
        const double m = mse(pred, target);
        text << name << ".mse=" << m << '\n';
        text << name << ".mse_unscaled=" << m / (model.label_scale() * model.label_scale()) << '\n';
      }
    }
    text.precision(old);
  }

  {
    std::ofstream os(dir / "report.txt", std::ios::trunc);
    if (!os) throw IoError("cannot write report");
    os << text.str();
  }
  if (report.confusion) {
    std::ofstream os(dir / "confusion.csv", std::ios::trunc);
    report.confusion->write_csv(os);
  }
  out << text.str();
  return 0;
}

int cmd_predict(const RunConfig& c, std::ostream& out) {
  const Model model = load_model(path_or(c, "model", "model.pecn"));
  if (!c.has("data")) throw UsageError("predict needs --data");
  const Dataset data = load_csv(c.get_string("data", ""));
  if (data.size() > 0) check_compatible(model, data);
  const fs::path path = path_or(c, "predictions", "predictions.csv");
  if (path.has_parent_path()) ensure_dir(path.parent_path());

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "row,col,predicted_class,class_probability,depth_bot,depth_tob\n";
  os << std::setprecision(17);
  const ModelConfig& cfg = model.config();
  const BatchOutput pred = predict_dataset(model, data);
  const std::vector<std::size_t> classes =
      cfg.has_classifier() && data.size() > 0 ? argmax_rows(pred.probabilities) : std::vector<std::size_t>();
  for (std::size_t i = 0; i < data.size(); ++i) {
    os << data.records[i].row << ',' << data.records[i].col << ',';
    if (cfg.has_classifier()) {
      os << classes[i] << ',' << pred.probabilities.at(i, classes[i]);
    } else {
      os << "-1,";
    }
    os << ',';
    if (cfg.has_regressor()) os << pred.depths.at(i, 0) / model.label_scale();
    os << ',';
    if (cfg.has_regressor() && cfg.regression_outputs > 1) os << pred.depths.at(i, 1) / model.label_scale();
    os << '\n';
  }
  out << "wrote " << data.size() << " predictions to " << path.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task 1D CNN for pulsed eddy current signals"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all");

  struct Command {
    std::string name;
    std::string help;
    std::vector<const std::vector<KeySpec>*> groups;
    int (*run)(const RunConfig&, std::ostream&);
  };
  const std::vector<Command> commands = {
      {"generate", "write synthetic train/test datasets", {&kCommonKeys, &kGenerateKeys}, cmd_generate},
      {"train", "train a model and write its history", {&kCommonKeys, &kArchitectureKeys, &kTrainKeys}, cmd_train},
      {"eval", "evaluate a model (and baselines) on a dataset", {&kCommonKeys, &kEvalKeys}, cmd_eval},
      {"predict", "write per-signal predictions", {&kCommonKeys, &kPredictKeys}, cmd_predict},
  };

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, bool>> flags;
  std::map<std::string, CLI::App*> subs;
  for (const Command& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sub;
    for (const auto* group : cmd.groups) {
      for (const KeySpec& k : *group) {
        if (k.flag) {
          sub->add_flag("--" + k.key, flags[cmd.name][k.key], k.help);
        } else {
          sub->add_option("--" + k.key, values[cmd.name][k.key], k.help);
        }
      }
    }
  }

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error:usage: " << e.what() << '\n';
    return 2;
  }

  for (const Command& cmd : commands) {
    CLI::App* sub = subs[cmd.name];
    if (!sub->parsed()) continue;
    try {
      RunConfig config;
      if (sub->get_option("--config")->count() > 0) config = RunConfig::load(values[cmd.name]["config"]);
      for (const auto& [key, value] : values[cmd.name])
        if (key != "config" && sub->get_option("--" + key)->count() > 0) config.set(key, value);
      for (const auto& [key, on] : flags[cmd.name])
        if (sub->get_option("--" + key)->count() > 0) config.set(key, on ? "true" : "false");
      std::set<std::string> known;
      for (const auto* group : cmd.groups)
        for (const KeySpec& k : *group) known.insert(k.key);
      known.erase("config");
      config.require_known(known);
      return cmd.run(config, out);
    } catch (const UsageError& e) {
      err << "error:" << e.category() << ": " << e.what() << '\n';
      return 2;
    } catch (const Error& e) {
      err << "error:" << e.category() << ": " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << "error:internal: " << e.what() << '\n';
      return 1;
    }
  }
  err << "error:usage: no command given\n";
  return 2;
}

}  // namespace pecnet
