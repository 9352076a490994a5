#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <openssl/evp.h>

#include "v2vsim/errors.hpp"
#include "v2vsim/metrics.hpp"

namespace v2vsim::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kAlpha = 0.01;

const std::vector<std::string_view> kAxes = {"range", "comm-pause", "memory", "cascade",
                                             "cars",  "side",       "road-length"};
bool v2v_axis(std::string_view axis) {
  return axis == "range" || axis == "comm-pause" || axis == "memory" || axis == "cascade";
}

}  // namespace

Behavior parse_behavior(std::string_view tag) {
  if (tag == "bb") return Behavior::BB;
  if (tag == "rue") return Behavior::RUE;
  if (tag == "due") return Behavior::DUE;
  if (tag == "v2v-rue") return Behavior::V2VRUE;
  if (tag == "v2v-due") return Behavior::V2VDUE;
  throw ParameterError("unknown behavior '" + std::string(tag) + "'");
}

std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::BB: return "bb";
    case Behavior::RUE: return "rue";
    case Behavior::DUE: return "due";
    case Behavior::V2VRUE: return "v2v-rue";
    case Behavior::V2VDUE: return "v2v-due";
  }
  return "bb";
}

bool uses_v2v(Behavior b) { return b == Behavior::V2VRUE || b == Behavior::V2VDUE; }

Command parse_command(std::string_view tag) {
  if (tag == "run") return Command::Run;
  if (tag == "sweep") return Command::Sweep;
  if (tag == "spread") return Command::Spread;
  if (tag == "equilibrium-check") return Command::EquilibriumCheck;
  throw ParameterError("unknown command '" + std::string(tag) + "'");
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Run: return "run";
    case Command::Sweep: return "sweep";
    case Command::Spread: return "spread";
    case Command::EquilibriumCheck: return "equilibrium-check";
  }
  return "run";
}

double parse_value(std::string_view text) {
  if (text == "inf" || text == "+inf" || text == "infinity") return kInfinity;
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParameterError("not a number: '" + std::string(text) + "'");
  }
}

std::string format_value(double v) { return v == kInfinity ? "inf" : fmt::format("{}", v); }

// ---------------------------------------------------------------- config

ExperimentConfig preset(std::string_view test) {
  ExperimentConfig cfg;
  cfg.test = std::string(test);
  if (test == "custom") return cfg;
  if (test == "test0") {
    cfg.command = Command::Run;
    cfg.behaviors = {Behavior::RUE};
    cfg.runs = 500;
  } else if (test == "test1") {
    cfg.command = Command::Sweep;
    cfg.network = "simple-eleven";
    cfg.behaviors = {Behavior::BB, Behavior::RUE, Behavior::DUE};
    cfg.od_mode = OdMode::StartRoads;
    cfg.axis = "cars";
    cfg.values = {25, 50, 75, 100};
    cfg.routes = true;
  } else if (test == "test2") {
    cfg.command = Command::Spread;
    cfg.road_length = 300.0;
    cfg.behaviors = {Behavior::BB};
    cfg.axis = "cascade";
    cfg.values = {1, 0};
    cfg.runs = 30;
  } else if (test == "test3" || test == "test5") {
    cfg.command = Command::Sweep;
    cfg.behaviors = test == "test3" ? std::vector<Behavior>{Behavior::V2VRUE}
                                    : std::vector<Behavior>{Behavior::V2VRUE, Behavior::V2VDUE};
    cfg.v2v.cascade = false;
    cfg.axis = "range";
    cfg.values = {0, 25, 50, 100, 150, 300, kInfinity};
  } else if (test == "test4") {
    cfg.command = Command::EquilibriumCheck;
    cfg.side = 3;
    cfg.road_length = 100.0;
    cfg.cars = 21;
    cfg.behaviors = {Behavior::V2VRUE};
    cfg.runs = 1;
  } else {
    throw ParameterError("unknown test '" + std::string(test) + "' (expected test0..test5)");
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& why) { throw ConfigError(why); };
  if (cfg.network == "manhattan") {
    if (cfg.side < 2) fail("a Manhattan network needs side >= 2");
    if (!(cfg.road_length > 0.0)) fail("road length must be positive");
  } else if (cfg.network == "file") {
    if (cfg.network_file.empty()) fail("network 'file' needs --network-file");
  } else if (cfg.network != "simple-eleven") {
    fail("unknown network '" + cfg.network + "' (manhattan, simple-eleven or file)");
  }
  if (cfg.behaviors.empty()) fail("no behavior selected");
  if (cfg.cars < 1) fail("at least one car is required");
  if (cfg.runs < 1) fail("at least one run is required");
  if (cfg.workers < 1) fail("at least one worker is required");
  if (!(cfg.params.dt > 0.0) || !(cfg.params.v_max > 0.0) || !(cfg.params.car_length > 0.0)) {
    fail("dt, v_max and car length must be positive");
  }
  if (cfg.due_max_iterations < 1) fail("DUE needs at least one iteration");
  try {
    v2vsim::validate(cfg.v2v);
  } catch (const ParameterError& e) {
    fail(e.what());
  }
  const bool any_v2v = std::any_of(cfg.behaviors.begin(), cfg.behaviors.end(), uses_v2v);
  const bool all_v2v = std::all_of(cfg.behaviors.begin(), cfg.behaviors.end(), uses_v2v);
  if (any_v2v && cfg.method == WeightMethod::M1) {
    fail("the V2V behaviors estimate weights from positions; M1 is not available for them");
  }
  if (!cfg.axis.empty()) {
    if (std::find(kAxes.begin(), kAxes.end(), cfg.axis) == kAxes.end()) {
      fail("unknown axis '" + cfg.axis + "'");
    }
    if (cfg.values.empty()) fail("axis '" + cfg.axis + "' has no values");
    if (cfg.network != "manhattan" && (cfg.axis == "side" || cfg.axis == "road-length")) {
      fail("axis '" + cfg.axis + "' only applies to the Manhattan network");
    }
  }
  switch (cfg.command) {
    case Command::Run:
      if (!cfg.axis.empty()) fail("'run' takes no axis; use 'sweep'");
      break;
    case Command::Sweep:
      if (cfg.axis.empty()) fail("'sweep' needs an axis and values");
      if (cfg.runs < 2) fail("'sweep' needs at least two runs per point for a confidence interval");
      if (v2v_axis(cfg.axis) && !all_v2v) {
        fail("sweeping '" + cfg.axis +
             "' only makes sense for v2v-rue / v2v-due; bb, rue and due ignore it");
      }
      break;
    case Command::Spread:
      if (cfg.behaviors != std::vector<Behavior>{Behavior::BB}) {
        fail("'spread' follows information over BB traffic; use --behavior bb");
      }
      break;
    case Command::EquilibriumCheck:
      if (cfg.network != "manhattan") fail("'equilibrium-check' uses a Manhattan network");
      if (cfg.cars < 2) fail("'equilibrium-check' needs congestion cars besides the tracked one");
      break;
  }
}

namespace {

json number_or_inf(double v) { return v == kInfinity ? json("inf") : json(v); }

double read_number(const json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (v.is_string()) return parse_value(v.get<std::string>());
  return v.get<double>();
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["command"] = to_string(cfg.command);
  doc["test"] = cfg.test;
  doc["network"] = cfg.network;
  doc["side"] = cfg.side;
  doc["road_length"] = cfg.road_length;
  doc["network_file"] = cfg.network_file;
  doc["behaviors"] = json::array();
  for (Behavior b : cfg.behaviors) doc["behaviors"].push_back(to_string(b));
  doc["cars"] = cfg.cars;
  doc["od_mode"] = to_string(cfg.od_mode);
  doc["destination"] = cfg.destination;
  doc["start_roads"] = cfg.start_roads;
  doc["dt"] = cfg.params.dt;
  doc["v_max"] = cfg.params.v_max;
  doc["car_length"] = cfg.params.car_length;
  doc["t_fin"] = cfg.t_fin;
  doc["weight_method"] = to_string(cfg.method);
  doc["range"] = number_or_inf(cfg.v2v.range);
  doc["comm_pause"] = cfg.v2v.comm_pause;
  doc["memory"] = number_or_inf(cfg.v2v.memory);
  doc["cascade"] = cfg.v2v.cascade;
  doc["nowcast_refresh"] =
      cfg.v2v.refresh == NowcastRefresh::EveryStep ? "every-step" : "at-junctions";
  doc["due_max_iterations"] = cfg.due_max_iterations;
  doc["due_tolerance"] = cfg.due_tolerance;
  doc["axis"] = cfg.axis;
  doc["values"] = json::array();
  for (double v : cfg.values) doc["values"].push_back(number_or_inf(v));
  doc["runs"] = cfg.runs;
  doc["seed"] = cfg.seed;
  doc["workers"] = cfg.workers;
  doc["trace"] = cfg.trace;
  doc["routes"] = cfg.routes;
  return doc;
}

ExperimentConfig config_from_json(const json& doc) {
  try {
    ExperimentConfig cfg;
    cfg.command = parse_command(doc.value("command", std::string("run")));
    cfg.test = doc.value("test", cfg.test);
    cfg.network = doc.value("network", cfg.network);
    cfg.side = doc.value("side", cfg.side);
    cfg.road_length = read_number(doc, "road_length", cfg.road_length);
    cfg.network_file = doc.value("network_file", cfg.network_file);
    if (doc.contains("behaviors")) {
      cfg.behaviors.clear();
      for (const auto& b : doc.at("behaviors")) cfg.behaviors.push_back(parse_behavior(b.get<std::string>()));
    }
    cfg.cars = doc.value("cars", cfg.cars);
    cfg.od_mode = parse_od_mode(doc.value("od_mode", std::string(to_string(cfg.od_mode))));
    cfg.destination = doc.value("destination", cfg.destination);
    cfg.start_roads = doc.value("start_roads", cfg.start_roads);
    cfg.params.dt = read_number(doc, "dt", cfg.params.dt);
    cfg.params.v_max = read_number(doc, "v_max", cfg.params.v_max);
    cfg.params.car_length = read_number(doc, "car_length", cfg.params.car_length);
    cfg.t_fin = read_number(doc, "t_fin", cfg.t_fin);
    cfg.method = parse_weight_method(doc.value("weight_method", std::string("M3")));
    cfg.v2v.range = read_number(doc, "range", cfg.v2v.range);
    cfg.v2v.comm_pause = read_number(doc, "comm_pause", cfg.v2v.comm_pause);
    cfg.v2v.memory = read_number(doc, "memory", cfg.v2v.memory);
    cfg.v2v.cascade = doc.value("cascade", cfg.v2v.cascade);
    cfg.v2v.refresh = parse_nowcast_refresh(doc.value("nowcast_refresh", std::string("every-step")));
    cfg.due_max_iterations = doc.value("due_max_iterations", cfg.due_max_iterations);
    cfg.due_tolerance = read_number(doc, "due_tolerance", cfg.due_tolerance);
    cfg.axis = doc.value("axis", cfg.axis);
    if (doc.contains("values")) {
      cfg.values.clear();
      for (const auto& v : doc.at("values")) {
        cfg.values.push_back(v.is_string() ? parse_value(v.get<std::string>()) : v.get<double>());
      }
    }
    cfg.runs = doc.value("runs", cfg.runs);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.workers = doc.value("workers", cfg.workers);
    cfg.trace = doc.value("trace", cfg.trace);
    cfg.routes = doc.value("routes", cfg.routes);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
}

// ---------------------------------------------------------------- scenarios

std::shared_ptr<const Network> make_network(const ExperimentConfig& cfg) {
  if (cfg.network == "simple-eleven") return std::make_shared<const Network>(build_simple_eleven());
  if (cfg.network == "file") {
    std::ifstream in(cfg.network_file);
    if (!in) throw ConfigError("cannot read network file '" + cfg.network_file + "'");
    std::stringstream text;
    text << in.rdbuf();
    return std::make_shared<const Network>(network_from_json(text.str()));
  }
  return std::make_shared<const Network>(build_manhattan(cfg.side, cfg.road_length));
}

OdSpec od_spec(const ExperimentConfig& cfg, const Network& net) {
  OdSpec spec;
  spec.mode = cfg.od_mode;
  const bool grid = cfg.network == "manhattan";
  spec.destination = cfg.destination;
  if (spec.destination < 0) {
    if (!grid) {
      spec.destination = 4;
    } else if (cfg.od_mode == OdMode::RandomOriginFixedDestination) {
      spec.destination = manhattan_junction(cfg.side, cfg.side - 1, cfg.side / 2);  // top centre
    } else {
      spec.destination = manhattan_junction(cfg.side, cfg.side - 1, cfg.side - 1);  // top right
    }
  }
  spec.start_roads = cfg.start_roads;
  if (spec.start_roads.empty() && cfg.od_mode == OdMode::StartRoads) {
    if (!grid) {
      spec.start_roads = {2, 6, 8};
    } else {
      // Two roads leaving the bottom-left corner.
      spec.start_roads = {*find_road(net, 0, manhattan_junction(cfg.side, 0, 1)),
                          *find_road(net, 0, manhattan_junction(cfg.side, 1, 0))};
    }
  }
  return spec;
}

Scenario make_scenario(const ExperimentConfig& cfg, std::shared_ptr<const Network> net,
                       std::size_t run) {
  Scenario scn;
  scn.seed = cfg.seed + run;
  scn.trips = draw_trips(*net, cfg.cars, od_spec(cfg, *net), scn.seed);
  scn.net = std::move(net);
  scn.params = cfg.params;
  scn.t_fin = cfg.t_fin;
  scn.method = cfg.method;
  return resolved(scn);
}

ExperimentConfig at_axis(const ExperimentConfig& cfg, double value) {
  ExperimentConfig out = cfg;
  const std::string& a = cfg.axis;
  if (a == "range") {
    out.v2v.range = value;
  } else if (a == "comm-pause") {
    out.v2v.comm_pause = value;
  } else if (a == "memory") {
    out.v2v.memory = value;
  } else if (a == "cascade") {
    out.v2v.cascade = value != 0.0;
  } else if (a == "cars") {
    out.cars = static_cast<std::size_t>(value);
  } else if (a == "side") {
    out.side = static_cast<int>(value);
  } else if (a == "road-length") {
    out.road_length = value;
  }
  return out;
}

RunResult run_behavior(Behavior b, const Scenario& scn, const ExperimentConfig& cfg,
                       const V2VRunOptions& opts) {
  RunOptions run = opts.run;
  run.max_iterations = cfg.due_max_iterations;
  run.tolerance = cfg.due_tolerance;
  switch (b) {
    case Behavior::BB: return run_bb(scn, run);
    case Behavior::RUE: return run_rue(scn, run);
    case Behavior::DUE: return run_due(scn, run);
    case Behavior::V2VRUE: return run_v2v_rue(scn, cfg.v2v, opts);
    case Behavior::V2VDUE: return run_v2v_due(scn, cfg.v2v, opts);
  }
  return {};
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(threads, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + file.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

PathCheckInstance make_path_check_instance(const ExperimentConfig& cfg) {
  auto net = make_network(cfg);
  const int s = cfg.side;
  const JunctionId origin = manhattan_junction(s, 0, s - 1);
  const JunctionId dest = manhattan_junction(s, s - 1, s - 1);
  std::vector<RoadId> straight;
  for (int row = 0; row + 1 < s; ++row) {
    straight.push_back(
        *find_road(*net, manhattan_junction(s, row, s - 1), manhattan_junction(s, row + 1, s - 1)));
  }
  PathCheckInstance inst;
  inst.scenario.net = net;
  inst.scenario.params = cfg.params;
  inst.scenario.t_fin = cfg.t_fin;
  inst.scenario.method = cfg.method;
  inst.scenario.seed = cfg.seed;
  for (std::size_t i = 0; i < cfg.cars; ++i) {
    inst.scenario.trips.push_back({origin, dest, -1});
    inst.forced.push_back(straight);
  }
  inst.tracked = static_cast<CarId>(cfg.cars - 1);
  inst.candidates = simple_paths(*net, origin, dest);
  return inst;
}

// ---------------------------------------------------------------- outputs

namespace {

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    names_.push_back(name);
    return out;
  }

  json checksums() const {
    json out = json::object();
    for (const std::string& n : names_) out[n] = sha256_file(dir_ / n);
    return out;
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

struct PointResults {
  std::vector<RunResult> runs;
};

std::vector<double> ttts(const std::vector<RunResult>& runs) {
  std::vector<double> v;
  for (const RunResult& r : runs) v.push_back(r.ttt);
  return v;
}

void write_routes(std::ostream& out, const std::string& axis_value, const RunResult& r,
                  bool header) {
  if (header) out << "axis_value,car,road,step\n";
  for (std::size_t c = 0; c < r.routes.size(); ++c) {
    for (const RoadEntry& e : r.routes[c]) fmt::print(out, "{},{},{},{}\n", axis_value, c, e.road, e.step);
  }
}

std::vector<RunResult> run_point(const ExperimentConfig& cfg, Behavior b,
                                 const std::vector<Scenario>& scenarios, OutputSet& outputs,
                                 const std::string& tag) {
  std::vector<RunResult> results(scenarios.size());
  std::vector<std::string> traces(scenarios.size());
  std::vector<std::string> iterations(scenarios.size());
  parallel_for(scenarios.size(), cfg.workers, [&](std::size_t i) {
    V2VRunOptions opts;
    std::ostringstream trace;
    std::ostringstream diag;
    if (cfg.trace) {
      opts.run.trajectory = &trace;
      if (b == Behavior::DUE) opts.run.diagnostics = &diag;
    }
    results[i] = run_behavior(b, scenarios[i], cfg, opts);
    traces[i] = trace.str();
    iterations[i] = diag.str();
  });
  if (cfg.trace) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      outputs.open(fmt::format("trace/{}_run{}.csv", tag, i)) << traces[i];
      if (!iterations[i].empty()) {
        outputs.open(fmt::format("trace/{}_run{}_iterations.csv", tag, i)) << iterations[i];
      }
    }
  }
  return results;
}

std::vector<Scenario> scenarios_for(const ExperimentConfig& cfg) {
  auto net = make_network(cfg);
  std::vector<Scenario> out(static_cast<std::size_t>(cfg.runs));
  parallel_for(out.size(), cfg.workers, [&](std::size_t i) { out[i] = make_scenario(cfg, net, i); });
  return out;
}

void write_runs(std::ostream& out, const std::vector<RunResult>& runs,
                const std::vector<Scenario>& scenarios, const std::string* axis_value) {
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (axis_value) out << *axis_value << ',';
    fmt::print(out, "{},{},{:.6f},{}\n", i, scenarios[i].seed, runs[i].ttt,
               runs[i].converged ? 1 : 0);
  }
}

void command_run(const ExperimentConfig& cfg, OutputSet& outputs, std::ostream* log) {
  const std::vector<Scenario> scenarios = scenarios_for(cfg);
  for (Behavior b : cfg.behaviors) {
    const std::string tag(to_string(b));
    const std::vector<RunResult> runs = run_point(cfg, b, scenarios, outputs, tag);
    {
      std::ofstream out = outputs.open("runs_" + tag + ".csv");
      out << "run,seed,ttt,converged\n";
      write_runs(out, runs, scenarios, nullptr);
    }
    const std::vector<double> v = ttts(runs);
    const std::vector<double> cum = cumulative_average(v);
    {
      std::ofstream out = outputs.open("cumulative_" + tag + ".csv");
      out << "runs,cumulative_mean,ci_halfwidth\n";
      for (std::size_t r = 0; r < cum.size(); ++r) {
        if (r == 0) {
          fmt::print(out, "1,{:.6f},\n", cum[0]);
        } else {
          fmt::print(out, "{},{:.6f},{:.6f}\n", r + 1, cum[r],
                     confidence_halfwidth(std::span(v).first(r + 1), kAlpha));
        }
      }
    }
    if (cfg.routes) {
      std::ofstream out = outputs.open("routes_" + tag + ".csv");
      write_routes(out, "", runs.front(), true);
    }
    if (log) {
      fmt::print(*log, "{}: mean TTT {:.3f} s over {} runs\n", tag, cum.back(), runs.size());
    }
  }
}

void command_sweep(const ExperimentConfig& cfg, OutputSet& outputs, std::ostream* log) {
  std::vector<std::ofstream> summary;
  std::vector<std::ofstream> per_run;
  std::vector<std::ofstream> routes;
  for (Behavior b : cfg.behaviors) {
    const std::string tag(to_string(b));
    summary.push_back(outputs.open("sweep_" + tag + ".csv"));
    summary.back() << "axis_value,mean_ttt,ci_halfwidth,runs\n";
    per_run.push_back(outputs.open("sweep_" + tag + "_runs.csv"));
    per_run.back() << "axis_value,run,seed,ttt,converged\n";
    if (cfg.routes) {
      routes.push_back(outputs.open("routes_" + tag + ".csv"));
      routes.back() << "axis_value,car,road,step\n";
    }
  }
  for (double value : cfg.values) {
    const ExperimentConfig point = at_axis(cfg, value);
    const std::string label = format_value(value);
    const std::vector<Scenario> scenarios = scenarios_for(point);
    for (std::size_t k = 0; k < cfg.behaviors.size(); ++k) {
      const Behavior b = cfg.behaviors[k];
      const std::string tag = fmt::format("{}_{}{}", to_string(b), cfg.axis, label);
      const std::vector<RunResult> runs = run_point(point, b, scenarios, outputs, tag);
      const std::vector<double> v = ttts(runs);
      const double m = mean(v);
      const double hw = confidence_halfwidth(v, kAlpha);
      fmt::print(summary[k], "{},{:.6f},{:.6f},{}\n", label, m, hw, v.size());
      write_runs(per_run[k], runs, scenarios, &label);
      if (cfg.routes) write_routes(routes[k], label, runs.front(), false);
      if (log) {
        fmt::print(*log, "{}={} {}: mean TTT {:.3f} +- {:.3f} s ({} runs)\n", cfg.axis, label,
                   to_string(b), m, hw, v.size());
      }
    }
  }
}

void command_spread(const ExperimentConfig& cfg, OutputSet& outputs, std::ostream* log) {
  std::vector<double> values = cfg.values;
  const bool has_axis = !cfg.axis.empty();
  if (!has_axis) values = {0.0};
  for (double value : values) {
    const ExperimentConfig point = has_axis ? at_axis(cfg, value) : cfg;
    const std::vector<Scenario> scenarios = scenarios_for(point);
    std::vector<KnowledgeSeries> series(scenarios.size());
    parallel_for(scenarios.size(), cfg.workers,
                 [&](std::size_t i) { series[i] = run_spread(scenarios[i], point.v2v); });
    std::size_t len = 0;
    for (const KnowledgeSeries& s : series) len = std::max(len, s.times.size());
    const std::string name =
        has_axis ? fmt::format("spread_{}{}.csv", cfg.axis, format_value(value)) : "spread.csv";
    std::ofstream out = outputs.open(name);
    out << "t,n_active,k_n\n";
    const double n = static_cast<double>(series.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      double na = 0.0;
      double kn = 0.0;
      for (const KnowledgeSeries& s : series) {
        if (i < s.times.size()) {
          na += static_cast<double>(s.n_a[i]);
          kn += s.k_n[i];
        }
      }
      peak = std::max(peak, kn / n);
      fmt::print(out, "{:.6f},{:.6f},{:.6f}\n", static_cast<double>(i) * cfg.params.dt, na / n, kn / n);
    }
    if (log) fmt::print(*log, "{}: peak mean K_N {:.3f}\n", name, peak);
  }
}

void command_equilibrium_check(const ExperimentConfig& cfg, OutputSet& outputs, std::ostream* log) {
  PathCheckInstance inst = make_path_check_instance(cfg);
  const Network& net = *inst.scenario.net;
  std::vector<EquilibriumCheck> checks(inst.candidates.size());
  parallel_for(checks.size(), cfg.workers, [&](std::size_t i) {
    std::vector<std::vector<RoadId>> forced = inst.forced;
    forced[inst.tracked] = inst.candidates[i];
    checks[i] = equilibrium_path_check(inst.scenario, cfg.v2v, forced, inst.tracked);
  });
  std::ofstream paths = outputs.open("equilibrium_paths.csv");
  paths << "path,roads,is_equilibrium,travel_time\n";
  std::ofstream choices = outputs.open("equilibrium_check.csv");
  choices << "path,junction,step,chosen,preferred,agree\n";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    std::string roads;
    for (RoadId r : inst.candidates[i]) roads += (roads.empty() ? "" : " ") + std::to_string(r);
    fmt::print(paths, "{},{},{},{:.6f}\n", i, roads, checks[i].is_equilibrium ? 1 : 0,
               checks[i].run.per_car_tt[inst.tracked]);
    for (const JunctionChoice& c : checks[i].choices) {
      fmt::print(choices, "{},{},{},{},{},{}\n", i, c.junction, c.step, c.chosen, c.preferred,
                 c.chosen == c.preferred ? 1 : 0);
    }
    if (log) {
      std::string juncs = std::to_string(net.road(inst.candidates[i].front()).from);
      for (RoadId r : inst.candidates[i]) juncs += "-" + std::to_string(net.road(r).to);
      fmt::print(*log, "path {} ({}): {}\n", i, juncs,
                 checks[i].is_equilibrium ? "equilibrium" : "not an equilibrium");
    }
  }
}

}  // namespace

json run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  validate(cfg);
  OutputSet outputs(out_dir);
  switch (cfg.command) {
    case Command::Run: command_run(cfg, outputs, log); break;
    case Command::Sweep: command_sweep(cfg, outputs, log); break;
    case Command::Spread: command_spread(cfg, outputs, log); break;
    case Command::EquilibriumCheck: command_equilibrium_check(cfg, outputs, log); break;
  }
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["version"] = kVersion;
  manifest["config"] = to_json(cfg);
  manifest["seeds"] = json::array();
  for (int i = 0; i < cfg.runs; ++i) manifest["seeds"].push_back(cfg.seed + static_cast<std::uint64_t>(i));
  manifest["outputs"] = outputs.checksums();
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
  return manifest;
}

ReplayReport replay(const fs::path& manifest_path, const fs::path& out_dir, std::ostream* log) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot read manifest '" + manifest_path.string() + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  const std::string version = manifest.value("version", std::string("?"));
  const int schema = manifest.value("schema_version", -1);
  if (version != kVersion || schema != kSchemaVersion) {
    throw ConfigError(fmt::format(
        "manifest was written by version {} (schema {}); this is version {} (schema {}); "
        "refusing to replay",
        version, schema, kVersion, kSchemaVersion));
  }
  const ExperimentConfig cfg = config_from_json(manifest.at("config"));
  if (manifest.contains("seeds")) {
    const auto seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (seeds[i] != cfg.seed + i) {
        throw ConfigError("manifest seed list does not follow seed + run index from config.seed");
      }
    }
  }
  const json fresh = run_experiment(cfg, out_dir, log);
  ReplayReport report;
  const json& before = manifest.at("outputs");
  const json& after = fresh.at("outputs");
  for (const auto& [name, sum] : before.items()) {
    if (!after.contains(name) || after.at(name) != sum) report.mismatched.push_back(name);
  }
  for (const auto& [name, sum] : after.items()) {
    if (!before.contains(name)) report.mismatched.push_back(name);
  }
  report.identical = report.mismatched.empty();
  return report;
}

}  // namespace v2vsim::harness
