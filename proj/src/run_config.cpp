#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nfad/crc32.hpp"
#include "nfad/run_config.hpp"

namespace nfad {

namespace {

using nlohmann::json;

template <typename T>
void fetch(const json& obj, const std::string& prefix, const char* key, T& dst,
           std::vector<std::string>& errors) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    errors.push_back(prefix + key + ": wrong type");
  }
}

void note_unknown(const json& obj, const std::string& prefix,
                  const std::set<std::string>& known,
                  std::vector<std::string>& errors) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (known.find(it.key()) == known.end())
      errors.push_back("unknown key: " + prefix + it.key());
}

const json* section(const json& j, const std::string& prefix, const char* key,
                    std::vector<std::string>& errors) {
  if (!j.contains(key)) return nullptr;
  const json& s = j.at(key);
  if (!s.is_object()) {
    errors.push_back(prefix + key + ": must be an object");
    return nullptr;
  }
  return &s;
}

void fetch_adam(const json& obj, const std::string& prefix, AdamConfig& opt,
                std::vector<std::string>& errors) {
  fetch(obj, prefix, "lr", opt.lr, errors);
  fetch(obj, prefix, "beta1", opt.beta1, errors);
  fetch(obj, prefix, "beta2", opt.beta2, errors);
  fetch(obj, prefix, "eps", opt.eps, errors);
  fetch(obj, prefix, "weight_decay", opt.weight_decay, errors);
}

void check_adam(const AdamConfig& opt, const std::string& prefix,
                std::vector<std::string>& errors) {
  if (!(opt.lr > 0.0)) errors.push_back(prefix + "lr: must be > 0");
  if (!(opt.beta1 >= 0.0 && opt.beta1 < 1.0))
    errors.push_back(prefix + "beta1: must be in [0, 1)");
  if (!(opt.beta2 >= 0.0 && opt.beta2 < 1.0))
    errors.push_back(prefix + "beta2: must be in [0, 1)");
  if (!(opt.eps > 0.0)) errors.push_back(prefix + "eps: must be > 0");
  if (!(opt.weight_decay >= 0.0))
    errors.push_back(prefix + "weight_decay: must be >= 0");
}

json adam_json(const AdamConfig& opt) {
  return json{{"lr", opt.lr},
              {"beta1", opt.beta1},
              {"beta2", opt.beta2},
              {"eps", opt.eps},
              {"weight_decay", opt.weight_decay}};
}

const std::set<std::string> kAdamKeys = {"lr", "beta1", "beta2", "eps",
                                         "weight_decay"};

// single line so the CLI's error output stays machine-parseable
std::string join_errors(const std::vector<std::string>& errors) {
  std::ostringstream msg;
  msg << "invalid config (" << errors.size() << " problem"
      << (errors.size() == 1 ? "" : "s") << "): ";
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i > 0) msg << "; ";
    msg << errors[i];
  }
  return msg.str();
}

}  // namespace

TailMethod TailConfig::parsed_method() const {
  if (method == "auto") return TailMethod::auto_select;
  if (method == "rejection") return TailMethod::rejection;
  if (method == "radial") return TailMethod::radial;
  throw std::invalid_argument("tail.method: unknown value '" + method + "'");
}

GridSide GridConfig::parsed_side() const {
  if (side == "target") return GridSide::target;
  if (side == "base") return GridSide::base;
  throw std::invalid_argument("grid.side: unknown value '" + side + "'");
}

std::string RunConfig::flow_model_path() const {
  return flow_model.empty() ? out + "/flow.nfad" : flow_model;
}

std::string RunConfig::clf_model_path() const {
  return clf_model.empty() ? out + "/clf.nfad" : clf_model;
}

RunConfig RunConfig::from_json(const json& j, std::vector<std::string>& errors) {
  RunConfig cfg;
  if (!j.is_object()) {
    errors.push_back("config root must be an object");
    return cfg;
  }
  note_unknown(j, "",
               {"seed", "out", "dataset", "flow", "nf_train", "tail", "clf",
                "grid", "experiment", "flow_model", "clf_model"},
               errors);
  cfg.seed_explicit = j.contains("seed");
  fetch(j, "", "seed", cfg.seed, errors);
  fetch(j, "", "out", cfg.out, errors);
  fetch(j, "", "flow_model", cfg.flow_model, errors);
  fetch(j, "", "clf_model", cfg.clf_model, errors);

  if (const json* s = section(j, "", "dataset", errors)) {
    const std::string p = "dataset.";
    note_unknown(*s, p,
                 {"kind", "n", "noise", "csv", "label_column", "label_map",
                  "train_fraction", "anomaly_count"},
                 errors);
    fetch(*s, p, "kind", cfg.dataset.kind, errors);
    fetch(*s, p, "n", cfg.dataset.n, errors);
    fetch(*s, p, "noise", cfg.dataset.noise, errors);
    fetch(*s, p, "csv", cfg.dataset.csv, errors);
    fetch(*s, p, "label_column", cfg.dataset.label_column, errors);
    fetch(*s, p, "train_fraction", cfg.dataset.train_fraction, errors);
    fetch(*s, p, "anomaly_count", cfg.dataset.anomaly_count, errors);
    if (s->contains("label_map")) {
      const json& m = s->at("label_map");
      if (!m.is_object()) {
        errors.push_back("dataset.label_map: must be an object");
      } else {
        cfg.dataset.label_map.clear();
        for (auto it = m.begin(); it != m.end(); ++it) {
          std::string v;
          try {
            v = it.value().get<std::string>();
          } catch (const json::exception&) {
            errors.push_back("dataset.label_map." + it.key() + ": wrong type");
            continue;
          }
          if (v == "normal")
            cfg.dataset.label_map[it.key()] = Label::normal;
          else if (v == "anomaly")
            cfg.dataset.label_map[it.key()] = Label::anomaly;
          else
            errors.push_back("dataset.label_map." + it.key() +
                             ": value must be \"normal\" or \"anomaly\"");
        }
      }
    }
  }

  if (const json* s = section(j, "", "flow", errors)) {
    const std::string p = "flow.";
    note_unknown(*s, p,
                 {"kind", "layers", "hidden", "bins", "bound", "scale_clamp"},
                 errors);
    fetch(*s, p, "kind", cfg.flow.kind, errors);
    fetch(*s, p, "layers", cfg.flow.layers, errors);
    fetch(*s, p, "hidden", cfg.flow.hidden, errors);
    fetch(*s, p, "bins", cfg.flow.bins, errors);
    fetch(*s, p, "bound", cfg.flow.bound, errors);
    fetch(*s, p, "scale_clamp", cfg.flow.scale_clamp, errors);
  }

  if (const json* s = section(j, "", "nf_train", errors)) {
    const std::string p = "nf_train.";
    std::set<std::string> known = {"epochs", "batch", "lambda_max",
                                   "lambda_ramp", "reg_samples"};
    known.insert(kAdamKeys.begin(), kAdamKeys.end());
    note_unknown(*s, p, known, errors);
    fetch(*s, p, "epochs", cfg.nf_train.epochs, errors);
    fetch(*s, p, "batch", cfg.nf_train.batch, errors);
    fetch(*s, p, "lambda_max", cfg.nf_train.lambda_max, errors);
    fetch(*s, p, "lambda_ramp", cfg.nf_train.lambda_ramp, errors);
    fetch(*s, p, "reg_samples", cfg.nf_train.reg_samples, errors);
    fetch_adam(*s, p, cfg.nf_train.opt, errors);
  }

  if (const json* s = section(j, "", "tail", errors)) {
    const std::string p = "tail.";
    note_unknown(*s, p, {"p", "method", "count"}, errors);
    fetch(*s, p, "p", cfg.tail.p, errors);
    fetch(*s, p, "method", cfg.tail.method, errors);
    fetch(*s, p, "count", cfg.tail.count, errors);
  }

  if (const json* s = section(j, "", "clf", errors)) {
    const std::string p = "clf.";
    std::set<std::string> known = {"epochs",     "batch",
                                   "surrogates_per_batch",
                                   "balanced",   "w_normal",
                                   "w_anomaly",  "w_surrogate",
                                   "val_fraction"};
    known.insert(kAdamKeys.begin(), kAdamKeys.end());
    note_unknown(*s, p, known, errors);
    fetch(*s, p, "epochs", cfg.clf.epochs, errors);
    fetch(*s, p, "batch", cfg.clf.batch, errors);
    fetch(*s, p, "surrogates_per_batch", cfg.clf.surrogates_per_batch, errors);
    fetch(*s, p, "balanced", cfg.clf.balanced, errors);
    fetch(*s, p, "w_normal", cfg.clf.weights.normal, errors);
    fetch(*s, p, "w_anomaly", cfg.clf.weights.anomaly, errors);
    fetch(*s, p, "w_surrogate", cfg.clf.weights.surrogate, errors);
    fetch(*s, p, "val_fraction", cfg.clf.val_fraction, errors);
    fetch_adam(*s, p, cfg.clf.opt, errors);
  }

  if (const json* s = section(j, "", "grid", errors)) {
    const std::string p = "grid.";
    note_unknown(*s, p, {"x0", "x1", "y0", "y1", "nx", "ny", "side"}, errors);
    fetch(*s, p, "x0", cfg.grid.spec.x0, errors);
    fetch(*s, p, "x1", cfg.grid.spec.x1, errors);
    fetch(*s, p, "y0", cfg.grid.spec.y0, errors);
    fetch(*s, p, "y1", cfg.grid.spec.y1, errors);
    fetch(*s, p, "nx", cfg.grid.spec.nx, errors);
    fetch(*s, p, "ny", cfg.grid.spec.ny, errors);
    fetch(*s, p, "side", cfg.grid.side, errors);
  }

  if (const json* s = section(j, "", "experiment", errors)) {
    const std::string p = "experiment.";
    note_unknown(*s, p, {"anomaly_counts", "seeds"}, errors);
    fetch(*s, p, "anomaly_counts", cfg.experiment.anomaly_counts, errors);
    fetch(*s, p, "seeds", cfg.experiment.seeds, errors);
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  std::vector<std::string> errors;
  RunConfig cfg = from_json(j, errors);
  if (errors.empty()) cfg.check(errors);
  if (!errors.empty()) throw std::invalid_argument(join_errors(errors));
  return cfg;
}

void RunConfig::check(std::vector<std::string>& errors) const {
  if (out.empty()) errors.push_back("out: must not be empty");

  if (dataset.kind != "moons" && dataset.kind != "csv")
    errors.push_back("dataset.kind: must be \"moons\" or \"csv\"");
  if (dataset.kind == "moons" && dataset.n < 2)
    errors.push_back("dataset.n: must be >= 2");
  if (dataset.noise < 0.0) errors.push_back("dataset.noise: must be >= 0");
  if (dataset.kind == "csv" && dataset.csv.empty())
    errors.push_back("dataset.csv: required when dataset.kind is \"csv\"");
  if (dataset.kind == "csv" && dataset.label_column.empty())
    errors.push_back("dataset.label_column: must not be empty");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0))
    errors.push_back("dataset.train_fraction: must be in (0, 1)");
  if (dataset.anomaly_count < -1)
    errors.push_back("dataset.anomaly_count: must be -1 or >= 0");

  if (flow.kind != "rqs" && flow.kind != "affine")
    errors.push_back("flow.kind: must be \"rqs\" or \"affine\"");
  if (flow.layers < 0) errors.push_back("flow.layers: must be >= 0");
  if (flow.hidden.empty())
    errors.push_back("flow.hidden: need at least one width");
  for (int w : flow.hidden)
    if (w <= 0) {
      errors.push_back("flow.hidden: widths must be positive");
      break;
    }
  if (flow.bins < 2 || flow.bins > 64)
    errors.push_back("flow.bins: must be in [2, 64]");
  if (!(flow.bound > 0.0)) errors.push_back("flow.bound: must be > 0");
  if (!(flow.scale_clamp > 0.0))
    errors.push_back("flow.scale_clamp: must be > 0");

  if (nf_train.epochs < 1) errors.push_back("nf_train.epochs: must be >= 1");
  if (nf_train.batch < 1) errors.push_back("nf_train.batch: must be >= 1");
  if (nf_train.lambda_max < 0.0)
    errors.push_back("nf_train.lambda_max: must be >= 0");
  if (!(nf_train.lambda_ramp >= 0.0 && nf_train.lambda_ramp <= 1.0))
    errors.push_back("nf_train.lambda_ramp: must be in [0, 1]");
  if (nf_train.reg_samples < 0)
    errors.push_back("nf_train.reg_samples: must be >= 0");
  check_adam(nf_train.opt, "nf_train.", errors);

  if (!(tail.p > 0.0 && tail.p <= 1.0))
    errors.push_back("tail.p: must be in (0, 1]");
  if (tail.method != "auto" && tail.method != "rejection" &&
      tail.method != "radial")
    errors.push_back("tail.method: must be \"auto\", \"rejection\" or \"radial\"");
  if (tail.count < 1) errors.push_back("tail.count: must be >= 1");

  if (clf.epochs < 1) errors.push_back("clf.epochs: must be >= 1");
  if (clf.batch < 1) errors.push_back("clf.batch: must be >= 1");
  if (clf.surrogates_per_batch < 0)
    errors.push_back("clf.surrogates_per_batch: must be >= 0");
  if (!(clf.weights.normal > 0.0))
    errors.push_back("clf.w_normal: must be > 0");
  if (!(clf.weights.anomaly > 0.0))
    errors.push_back("clf.w_anomaly: must be > 0");
  if (!(clf.weights.surrogate > 0.0))
    errors.push_back("clf.w_surrogate: must be > 0");
  if (!(clf.val_fraction >= 0.0 && clf.val_fraction < 1.0))
    errors.push_back("clf.val_fraction: must be in [0, 1)");
  check_adam(clf.opt, "clf.", errors);

  if (grid.spec.nx < 1) errors.push_back("grid.nx: must be >= 1");
  if (grid.spec.ny < 1) errors.push_back("grid.ny: must be >= 1");
  if (!(grid.spec.x1 > grid.spec.x0))
    errors.push_back("grid.x1: must be > grid.x0");
  if (!(grid.spec.y1 > grid.spec.y0))
    errors.push_back("grid.y1: must be > grid.y0");
  if (grid.side != "target" && grid.side != "base")
    errors.push_back("grid.side: must be \"target\" or \"base\"");

  if (experiment.anomaly_counts.empty())
    errors.push_back("experiment.anomaly_counts: must not be empty");
  for (long c : experiment.anomaly_counts)
    if (c < 0) {
      errors.push_back("experiment.anomaly_counts: counts must be >= 0");
      break;
    }
  if (experiment.seeds.empty())
    errors.push_back("experiment.seeds: must not be empty");
}

void RunConfig::check_or_throw() const {
  std::vector<std::string> errors;
  check(errors);
  if (!errors.empty()) throw std::invalid_argument(join_errors(errors));
}

json RunConfig::to_json() const {
  json lm = json::object();
  for (const auto& [k, v] : dataset.label_map)
    lm[k] = v == Label::normal ? "normal" : "anomaly";

  json j;
  j["seed"] = seed;
  j["out"] = out;
  j["flow_model"] = flow_model;
  j["clf_model"] = clf_model;
  j["dataset"] = {{"kind", dataset.kind},
                  {"n", dataset.n},
                  {"noise", dataset.noise},
                  {"csv", dataset.csv},
                  {"label_column", dataset.label_column},
                  {"label_map", lm},
                  {"train_fraction", dataset.train_fraction},
                  {"anomaly_count", dataset.anomaly_count}};
  j["flow"] = {{"kind", flow.kind},     {"layers", flow.layers},
               {"hidden", flow.hidden}, {"bins", flow.bins},
               {"bound", flow.bound},   {"scale_clamp", flow.scale_clamp}};
  j["nf_train"] = adam_json(nf_train.opt);
  j["nf_train"]["epochs"] = nf_train.epochs;
  j["nf_train"]["batch"] = nf_train.batch;
  j["nf_train"]["lambda_max"] = nf_train.lambda_max;
  j["nf_train"]["lambda_ramp"] = nf_train.lambda_ramp;
  j["nf_train"]["reg_samples"] = nf_train.reg_samples;
  j["tail"] = {{"p", tail.p}, {"method", tail.method}, {"count", tail.count}};
  j["clf"] = adam_json(clf.opt);
  j["clf"]["epochs"] = clf.epochs;
  j["clf"]["batch"] = clf.batch;
  j["clf"]["surrogates_per_batch"] = clf.surrogates_per_batch;
  j["clf"]["balanced"] = clf.balanced;
  j["clf"]["w_normal"] = clf.weights.normal;
  j["clf"]["w_anomaly"] = clf.weights.anomaly;
  j["clf"]["w_surrogate"] = clf.weights.surrogate;
  j["clf"]["val_fraction"] = clf.val_fraction;
  j["grid"] = {{"x0", grid.spec.x0}, {"x1", grid.spec.x1},
               {"y0", grid.spec.y0}, {"y1", grid.spec.y1},
               {"nx", grid.spec.nx}, {"ny", grid.spec.ny},
               {"side", grid.side}};
  j["experiment"] = {{"anomaly_counts", experiment.anomaly_counts},
                     {"seeds", experiment.seeds}};
  return j;
}

std::uint32_t RunConfig::fingerprint() const {
  json j = to_json();
  j.erase("out");
  j.erase("flow_model");
  j.erase("clf_model");
  j.erase("experiment");
  const std::string s = j.dump();
  return crc32_bytes(reinterpret_cast<const unsigned char*>(s.data()),
                     s.size());
}

}  // namespace nfad
