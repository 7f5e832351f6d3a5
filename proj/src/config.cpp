#include "koopman/config.hpp"

#include <fstream>
#include <sstream>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(trim(cell)));
  return out;
}

Vector parse_vector(const std::string& v) {
  std::vector<double> vals;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) vals.push_back(std::stod(trim(cell)));
  Vector out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw usage_error("config: bad boolean for '" + key + "': " + v);
}

}  // namespace

OdeSystem ExperimentConfig::make_system() const {
  return system == SystemKind::VanDerPol ? make_van_der_pol(vdp)
                                         : make_glycolysis(glyco);
}

Vector ExperimentConfig::default_x0() const {
  if (x0.size() > 0) return x0;
  if (system == SystemKind::VanDerPol) {
    Vector v(2);
    v << 1.0, 0.0;
    return v;
  }
  Vector v(7);
  v << 1.2, 1.5, 0.2, 0.4, 0.3, 2.7, 0.1;
  return v;
}

double ExperimentConfig::effective_dt() const {
  if (dt > 0.0) return dt;
  return system == SystemKind::VanDerPol ? 0.05 : 0.01;
}

const std::vector<int>& ExperimentConfig::effective_block_widths() const {
  return block_widths.empty() ? widths : block_widths;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  bool eta_set = false, eta_w_set = false, eta_k_set = false;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      if (section != "system" && section != "dataset" &&
          section != "dictionary" && section != "training" &&
          section != "distributed" && section != "output")
        throw usage_error("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw usage_error("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto bad_key = [&]() -> usage_error {
      return usage_error("config: unknown key '" + key + "' in [" + section +
                         "]");
    };

    if (section == "system") {
      if (key == "kind") {
        if (value == "vdp" || value == "van_der_pol")
          cfg.system = SystemKind::VanDerPol;
        else if (value == "glycolysis")
          cfg.system = SystemKind::Glycolysis;
        else
          throw usage_error("config: unknown system kind '" + value + "'");
      } else if (key == "mu")
        cfg.vdp.mu = std::stod(value);
      else if (key == "dt")
        cfg.dt = std::stod(value);
      else if (key == "steps")
        cfg.steps = std::stoi(value);
      else if (key == "x0")
        cfg.x0 = parse_vector(value);
      else if (key == "j_flux")
        cfg.glyco.j_flux = std::stod(value);
      else if (key == "a")
        cfg.glyco.a = std::stod(value);
      else if (key == "n")
        cfg.glyco.n = std::stod(value);
      else if (key == "k1_cap")
        cfg.glyco.k1_cap = std::stod(value);
      else if (key == "kappa")
        cfg.glyco.kappa = std::stod(value);
      else if (key == "phi")
        cfg.glyco.phi = std::stod(value);
      else if (key == "q_exp")
        cfg.glyco.q_exp = std::stod(value);
      else if (key == "k")
        cfg.glyco.k = std::stod(value);
      else if (key == "k1")
        cfg.glyco.k1 = std::stod(value);
      else if (key == "k2")
        cfg.glyco.k2 = std::stod(value);
      else if (key == "k3")
        cfg.glyco.k3 = std::stod(value);
      else if (key == "k4")
        cfg.glyco.k4 = std::stod(value);
      else if (key == "k5")
        cfg.glyco.k5 = std::stod(value);
      else if (key == "k6")
        cfg.glyco.k6 = std::stod(value);
      else
        throw bad_key();
    } else if (section == "dataset") {
      if (key == "n_train")
        cfg.n_train = std::stoi(value);
      else if (key == "n_predict")
        cfg.n_predict = std::stoi(value);
      else if (key == "normalize")
        cfg.normalize = parse_bool(key, value);
      else if (key == "append_one")
        cfg.append_one = parse_bool(key, value);
      else
        throw bad_key();
    } else if (section == "dictionary") {
      if (key == "widths")
        cfg.widths = parse_int_list(value);
      else if (key == "activation")
        cfg.activation = activation_from_name(value);
      else if (key == "augment")
        cfg.augment = parse_bool(key, value);
      else
        throw bad_key();
    } else if (section == "training") {
      if (key == "mode") {
        if (value == "central")
          cfg.mode = TrainMode::Central;
        else if (value == "dist-sync")
          cfg.mode = TrainMode::DistSync;
        else if (value == "dist-async")
          cfg.mode = TrainMode::DistAsync;
        else
          throw usage_error("config: unknown mode '" + value + "'");
      } else if (key == "schedule") {
        if (value == "constant")
          cfg.schedule.kind = ScheduleKind::Constant;
        else if (value == "diminishing")
          cfg.schedule.kind = ScheduleKind::Diminishing;
        else if (value == "auto")
          cfg.schedule.kind = ScheduleKind::Auto;
        else
          throw usage_error("config: unknown schedule '" + value + "'");
      } else if (key == "eta") {
        cfg.schedule.eta_w = cfg.schedule.eta_k = std::stod(value);
        eta_set = true;
      } else if (key == "eta_w") {
        cfg.schedule.eta_w = std::stod(value);
        eta_w_set = true;
      } else if (key == "eta_k") {
        cfg.schedule.eta_k = std::stod(value);
        eta_k_set = true;
      } else if (key == "iterations")
        cfg.iterations = std::stoi(value);
      else if (key == "tol")
        cfg.tol = std::stod(value);
      else if (key == "seed")
        cfg.seed = std::stoull(value);
      else if (key == "gradient") {
        if (value == "full")
          cfg.gradient = GradientMode::Full;
        else if (value == "lemma1")
          cfg.gradient = GradientMode::Lemma1;
        else
          throw usage_error("config: unknown gradient mode '" + value + "'");
      } else if (key == "tracker") {
        if (value == "best")
          cfg.tracker = TrackerMode::BestSoFar;
        else if (value == "consecutive")
          cfg.tracker = TrackerMode::Consecutive;
        else
          throw usage_error("config: unknown tracker '" + value + "'");
      } else if (key == "k_init") {
        if (value == "identity")
          cfg.k_init = KoopmanInit::Identity;
        else if (value == "random")
          cfg.k_init = KoopmanInit::Random;
        else
          throw usage_error("config: unknown k_init '" + value + "'");
      } else if (key == "u_k")
        cfg.bounds.u_k = std::stod(value);
      else if (key == "u_w")
        cfg.bounds.u_w = std::stod(value);
      else if (key == "project")
        cfg.bounds.project = parse_bool(key, value);
      else if (key == "rate_scale")
        cfg.rate_scale = std::stod(value);
      else
        throw bad_key();
    } else if (section == "distributed") {
      if (key == "q")
        cfg.q = std::stoi(value);
      else if (key == "block_sizes")
        cfg.block_sizes = parse_int_list(value);
      else if (key == "block_widths")
        cfg.block_widths = parse_int_list(value);
      else if (key == "max_delay")
        cfg.max_delay = std::stoi(value);
      else if (key == "delay_dist") {
        if (value == "fixed")
          cfg.delay_dist = DelayDist::Fixed;
        else if (value == "uniform")
          cfg.delay_dist = DelayDist::Uniform;
        else
          throw usage_error("config: unknown delay_dist '" + value + "'");
      } else if (key == "mode") {
        if (value == "sync")
          cfg.mode = TrainMode::DistSync;
        else if (value == "async")
          cfg.mode = TrainMode::DistAsync;
        else
          throw usage_error("config: unknown distributed mode '" + value +
                            "'");
      } else if (key == "seed")
        cfg.bus_seed = std::stoull(value);
      else
        throw bad_key();
    } else if (section == "output") {
      throw bad_key();  // output locations come from the CLI --out flag
    } else {
      throw usage_error("config: key '" + key + "' outside any section");
    }
  }
  if (cfg.schedule.kind == ScheduleKind::Constant && !eta_set &&
      !(eta_w_set && eta_k_set))
    throw usage_error("config: constant schedule needs eta (or eta_w, eta_k)");
  if (cfg.bus_seed == 0) cfg.bus_seed = cfg.seed;
  if (cfg.n_train < 1 || cfg.n_predict < 0 ||
      cfg.n_train + cfg.n_predict > cfg.steps)
    throw usage_error("config: dataset split exceeds the sampled trajectory");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw usage_error("cannot open config: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

}  // namespace koopman
