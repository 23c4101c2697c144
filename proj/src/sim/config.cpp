#include "wqfl/sim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace wqfl::sim {
namespace {

using nlohmann::json;

double to_dbm(double watt_per_hz) { return 10.0 * std::log10(watt_per_hz) + 30.0; }

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json to_json(const SimConfig& c) {
  json users = json::array();
  for (const auto& o : c.overrides) {
    users.push_back({{"id", o.id},
                     {"cycles_per_bit", opt(o.cycles_per_bit)},
                     {"workload_bits", opt(o.workload_bits)},
                     {"f_max", opt(o.f_max)},
                     {"e_max", opt(o.e_max)},
                     {"distance", opt(o.distance)}});
  }
  const auto& p = c.physics;
  const auto& t = c.trainer;
  const auto& d = c.dataset;
  return {
      {"n_users", c.n_users},
      {"cycles_min", c.cycles_min},
      {"cycles_max", c.cycles_max},
      {"distance_min", c.distance_min},
      {"distance_max", c.distance_max},
      {"workload_bits", c.workload_bits},
      {"f_max", c.f_max},
      {"e_max", c.e_max},
      {"overrides", users},
      {"physics",
       {{"bandwidth_hz", p.bandwidth_hz},
        {"noise_dbm_per_hz", to_dbm(p.noise_psd)},
        {"zeta", p.zeta},
        {"tau", p.tau},
        {"header_bits", p.header_bits},
        {"pathloss_exponent", p.pathloss_exponent}}},
      {"model", {{"input", c.model.input}, {"hidden", c.model.hidden}, {"output", c.model.output}}},
      {"trainer",
       {{"batch_size", t.batch_size},
        {"optimizer", t.optimizer == fl::Optimizer::adam ? "adam" : "sgd"},
        {"schedule", t.schedule == fl::LrSchedule::constant ? "constant" : "diminishing"},
        {"learning_rate", t.learning_rate},
        {"mu", t.mu},
        {"gamma", t.gamma},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"adam_eps", t.adam_eps}}},
      {"epsilon", {{"eps0", c.epsilon.eps0}, {"eps_final", opt(c.epsilon.eps_final)}, {"ratio", opt(c.epsilon.ratio)}}},
      {"rounds", c.rounds},
      {"dataset",
       {{"kind", d.kind == DatasetSpec::Kind::mnist ? "mnist" : "synthetic"},
        {"mnist_dir", d.mnist_dir},
        {"train_limit", d.train_limit},
        {"test_limit", d.test_limit},
        {"synthetic_train", d.synthetic_train},
        {"synthetic_test", d.synthetic_test},
        {"synthetic_dim", d.synthetic.dim},
        {"synthetic_classes", d.synthetic.classes},
        {"synthetic_noise", d.synthetic.noise},
        {"synthetic_seed", d.synthetic.seed}}},
      {"partition",
       {{"mode", c.partition.mode == fl::PartitionMode::iid ? "iid" : "noniid"},
        {"labels_per_user", c.partition.labels_per_user},
        {"samples_per_user", c.partition.samples_per_user}}},
      {"scheme", to_string(c.scheme)},
      {"fixed_bits", c.fixed_bits},
      {"lossless_bits", c.lossless_bits},
      {"solver",
       {{"b_cap", c.solver.b_cap},
        {"lc_rel_tol", c.solver.lc_rel_tol},
        {"c3_rel_tol", c.solver.c3_rel_tol},
        {"integer_search", c.solver.integer_search}}},
      {"oracle_check", c.oracle_check},
      {"seed", c.seed},
      {"metrics_path", c.metrics_path},
      {"diagnostics_path", c.diagnostics_path},
  };
}

template <class E>
E pick(const std::string& value, std::initializer_list<std::pair<const char*, E>> options,
       const char* what) {
  for (const auto& [name, e] : options) {
    if (value == name) return e;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + value + "'");
}

SimConfig from_json(const json& j) {
  SimConfig c;
  c.n_users = j.at("n_users").get<int>();
  c.cycles_min = j.at("cycles_min").get<double>();
  c.cycles_max = j.at("cycles_max").get<double>();
  c.distance_min = j.at("distance_min").get<double>();
  c.distance_max = j.at("distance_max").get<double>();
  c.workload_bits = j.at("workload_bits").get<double>();
  c.f_max = j.at("f_max").get<double>();
  c.e_max = j.at("e_max").get<double>();
  for (const auto& u : j.at("overrides")) {
    for (const auto& [key, _] : u.items()) {
      static const char* allowed[] = {"id", "cycles_per_bit", "workload_bits", "f_max", "e_max", "distance"};
      if (std::find(std::begin(allowed), std::end(allowed), key) == std::end(allowed)) {
        throw ConfigError("unknown key 'overrides[]." + key + "'");
      }
    }
    UserOverride o;
    o.id = u.at("id").get<int>();
    o.cycles_per_bit = get_opt<double>(u, "cycles_per_bit");
    o.workload_bits = get_opt<double>(u, "workload_bits");
    o.f_max = get_opt<double>(u, "f_max");
    o.e_max = get_opt<double>(u, "e_max");
    o.distance = get_opt<double>(u, "distance");
    c.overrides.push_back(o);
  }

  const auto& p = j.at("physics");
  c.physics.bandwidth_hz = p.at("bandwidth_hz").get<double>();
  c.physics.noise_psd = channel::dbm_per_hz_to_watt_per_hz(p.at("noise_dbm_per_hz").get<double>());
  c.physics.zeta = p.at("zeta").get<double>();
  c.physics.tau = p.at("tau").get<int>();
  c.physics.header_bits = p.at("header_bits").get<std::int64_t>();
  c.physics.pathloss_exponent = p.at("pathloss_exponent").get<double>();

  const auto& m = j.at("model");
  c.model = {m.at("input").get<int>(), m.at("hidden").get<int>(), m.at("output").get<int>()};

  const auto& t = j.at("trainer");
  c.trainer.tau = c.physics.tau;
  c.trainer.batch_size = t.at("batch_size").get<int>();
  c.trainer.optimizer = pick<fl::Optimizer>(t.at("optimizer").get<std::string>(),
                                            {{"adam", fl::Optimizer::adam}, {"sgd", fl::Optimizer::sgd}},
                                            "optimizer");
  c.trainer.schedule = pick<fl::LrSchedule>(
      t.at("schedule").get<std::string>(),
      {{"constant", fl::LrSchedule::constant}, {"diminishing", fl::LrSchedule::diminishing}}, "schedule");
  c.trainer.learning_rate = t.at("learning_rate").get<double>();
  c.trainer.mu = t.at("mu").get<double>();
  c.trainer.gamma = t.at("gamma").get<double>();
  c.trainer.beta1 = t.at("beta1").get<double>();
  c.trainer.beta2 = t.at("beta2").get<double>();
  c.trainer.adam_eps = t.at("adam_eps").get<double>();

  const auto& e = j.at("epsilon");
  c.epsilon.eps0 = e.at("eps0").get<double>();
  c.epsilon.eps_final = get_opt<double>(e, "eps_final");
  c.epsilon.ratio = get_opt<double>(e, "ratio");
  c.rounds = j.at("rounds").get<int>();

  const auto& d = j.at("dataset");
  c.dataset.kind = pick<DatasetSpec::Kind>(
      d.at("kind").get<std::string>(),
      {{"synthetic", DatasetSpec::Kind::synthetic}, {"mnist", DatasetSpec::Kind::mnist}}, "dataset kind");
  c.dataset.mnist_dir = d.at("mnist_dir").get<std::string>();
  c.dataset.train_limit = d.at("train_limit").get<std::size_t>();
  c.dataset.test_limit = d.at("test_limit").get<std::size_t>();
  c.dataset.synthetic_train = d.at("synthetic_train").get<std::size_t>();
  c.dataset.synthetic_test = d.at("synthetic_test").get<std::size_t>();
  c.dataset.synthetic.dim = d.at("synthetic_dim").get<int>();
  c.dataset.synthetic.classes = d.at("synthetic_classes").get<int>();
  c.dataset.synthetic.noise = d.at("synthetic_noise").get<double>();
  c.dataset.synthetic.seed = d.at("synthetic_seed").get<std::uint64_t>();

  const auto& q = j.at("partition");
  c.partition.mode = pick<fl::PartitionMode>(
      q.at("mode").get<std::string>(), {{"iid", fl::PartitionMode::iid}, {"noniid", fl::PartitionMode::noniid}},
      "partition mode");
  c.partition.labels_per_user = q.at("labels_per_user").get<int>();
  c.partition.samples_per_user = q.at("samples_per_user").get<std::size_t>();

  c.scheme = parse_scheme(j.at("scheme").get<std::string>());
  c.fixed_bits = j.at("fixed_bits").get<int>();
  c.lossless_bits = j.at("lossless_bits").get<int>();
  const auto& s = j.at("solver");
  c.solver.b_cap = s.at("b_cap").get<double>();
  c.solver.lc_rel_tol = s.at("lc_rel_tol").get<double>();
  c.solver.c3_rel_tol = s.at("c3_rel_tol").get<double>();
  c.solver.integer_search = s.at("integer_search").get<bool>();
  c.oracle_check = j.at("oracle_check").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.metrics_path = j.at("metrics_path").get<std::string>();
  c.diagnostics_path = j.at("diagnostics_path").get<std::string>();
  return c;
}

// Every key of `patch` must exist in `base`; arrays and null slots accept anything.
void check_keys(const json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) return;
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown key '" + path + "'");
    if (base.at(key).is_object()) {
      if (!value.is_object()) throw ConfigError("key '" + path + "' must be an object");
      check_keys(base.at(key), value, path);
    }
  }
}

SimConfig merge(const SimConfig& base, const json& patch) {
  if (!patch.is_object()) throw ConfigError("configuration must be a JSON object");
  json full = to_json(base);
  check_keys(full, patch, "");
  full.merge_patch(patch);
  // merge_patch drops keys set to null; put the optional slots back.
  if (!full["epsilon"].contains("eps_final")) full["epsilon"]["eps_final"] = nullptr;
  if (!full["epsilon"].contains("ratio")) full["epsilon"]["ratio"] = nullptr;
  try {
    SimConfig c = from_json(full);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

}  // namespace

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::proposed:
      return "proposed";
    case Scheme::fixed_bits:
      return "fixed_bits";
    case Scheme::equal_slots:
      return "equal_slots";
    case Scheme::equal_energy:
      return "equal_energy";
    case Scheme::lossless:
      return "lossless";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  return pick<Scheme>(name,
                      {{"proposed", Scheme::proposed},
                       {"fixed_bits", Scheme::fixed_bits},
                       {"equal_slots", Scheme::equal_slots},
                       {"equal_energy", Scheme::equal_energy},
                       {"lossless", Scheme::lossless}},
                      "scheme");
}

fl::EpsilonSchedule EpsilonSpec::make(int rounds) const {
  try {
    if (eps_final && ratio) throw ConfigError("set at most one of epsilon.eps_final and epsilon.ratio");
    if (eps_final) return fl::EpsilonSchedule::geometric_to(eps0, *eps_final, rounds);
    if (ratio) return fl::EpsilonSchedule::geometric(eps0, *ratio);
    return fl::EpsilonSchedule::constant(eps0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("epsilon: ") + e.what());
  }
}

void SimConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(n_users >= 1, "n_users must be >= 1");
  need(rounds >= 1, "rounds must be >= 1");
  need(cycles_min > 0.0 && cycles_max >= cycles_min, "need 0 < cycles_min <= cycles_max");
  need(distance_min > 0.0 && distance_max >= distance_min, "need 0 < distance_min <= distance_max");
  need(workload_bits > 0.0 && f_max > 0.0 && e_max > 0.0, "workload_bits, f_max and e_max must be positive");
  need(fixed_bits >= 1 && fixed_bits <= quant::kMaxBits, "fixed_bits out of range");
  need(lossless_bits >= 1 && lossless_bits <= quant::kMaxBits, "lossless_bits out of range");
  need(solver.b_cap >= 1.0 && solver.b_cap <= quant::kMaxBits, "solver.b_cap must lie in [1, 62]");
  need(trainer.tau == physics.tau, "trainer and physics tau differ");
  for (const auto& o : overrides) {
    need(o.id >= 0 && o.id < n_users, "override for unknown user " + std::to_string(o.id));
  }
  need(!oracle_check || n_users <= 3, "oracle_check needs at most three users");
  need(partition.samples_per_user >= static_cast<std::size_t>(trainer.batch_size),
       "samples_per_user must be >= batch_size");
  need(model.output == (dataset.kind == DatasetSpec::Kind::synthetic ? dataset.synthetic.classes : 10),
       "model output size must match the number of classes");
  need(dataset.kind == DatasetSpec::Kind::mnist ? model.input == 784 : model.input == dataset.synthetic.dim,
       "model input size must match the data dimension");
  try {
    physics.validate();
    trainer.validate();
    (void)model.num_params();
    (void)epsilon.make(rounds);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

SimConfig reference_preset() { return SimConfig{}; }

SimConfig parse_config(const std::string& json_text, const SimConfig& base) {
  json patch;
  try {
    patch = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return merge(base, patch);
}

SimConfig load_config(const std::filesystem::path& path, const SimConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), base);
}

void apply_override(SimConfig& cfg, const std::string& key, const std::string& value) {
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  json patch = json::object();
  json* node = &patch;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("malformed key '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = v;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
  cfg = merge(cfg, patch);
}

std::string dump_config(const SimConfig& cfg) { return to_json(cfg).dump(2); }

std::filesystem::path resolve_mnist_dir(const DatasetSpec& spec) {
  if (!spec.mnist_dir.empty()) return spec.mnist_dir;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) {
    const std::filesystem::path root(env);
    if (std::filesystem::is_directory(root / "mnist")) return root / "mnist";
    return root;
  }
  return "data/mnist";
}

}  // namespace wqfl::sim
