#include "ucpo/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace ucpo {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path.empty() ? what : path + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) { known = true; break; }
    if (!known) fail(path, "unknown key '" + item.key() + "'");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(path + "." + key, "expected a number");
  return v->get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key,
            int fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
  return v->get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "." + key, "expected a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& path,
                       const char* key, const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(path + "." + key, "expected a string");
  return v->get<std::string>();
}

RewardScheme parse_scheme(const json& obj, const std::string& path,
                          RewardScheme fallback) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path, {"r_right", "r_wrong", "r_uncertain"});
  RewardScheme s = fallback;
  s.r_right = get_number(obj, path, "r_right", s.r_right);
  s.r_wrong = get_number(obj, path, "r_wrong", s.r_wrong);
  s.r_uncertain = get_number(obj, path, "r_uncertain", s.r_uncertain);
  return s;
}

DuraParams parse_dura(const json& obj, const std::string& path,
                      DuraParams fallback) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(
      obj, path, {"w", "eps", "lambda", "alpha", "enable_fusion", "enable_tanh"});
  DuraParams d = fallback;
  d.w = get_number(obj, path, "w", d.w);
  d.eps = get_number(obj, path, "eps", d.eps);
  d.lambda = get_number(obj, path, "lambda", d.lambda);
  d.alpha = get_number(obj, path, "alpha", d.alpha);
  d.enable_fusion = get_bool(obj, path, "enable_fusion", d.enable_fusion);
  d.enable_tanh = get_bool(obj, path, "enable_tanh", d.enable_tanh);
  return d;
}

Method parse_method(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a method name string");
  try {
    return method_from_name(v.get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

SimConfig parse_sim(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"method", "scheme", "group_size", "dura", "lr",
                       "clip_eps", "kl_beta", "steps", "seed",
                       "init_abstain_prob", "capability_rate",
                       "epochs_per_batch"});
  SimConfig sim;
  if (const json* v = find(obj, "method")) sim.method = parse_method(*v, path + ".method");
  if (const json* v = find(obj, "scheme"))
    sim.scheme = parse_scheme(*v, path + ".scheme", sim.scheme);
  sim.group_size = get_int(obj, path, "group_size", sim.group_size);
  if (const json* v = find(obj, "dura"))
    sim.dura = parse_dura(*v, path + ".dura", sim.dura);
  sim.lr = get_number(obj, path, "lr", sim.lr);
  sim.clip_eps = get_number(obj, path, "clip_eps", sim.clip_eps);
  sim.kl_beta = get_number(obj, path, "kl_beta", sim.kl_beta);
  sim.steps = get_int(obj, path, "steps", sim.steps);
  if (const json* v = find(obj, "seed")) {
    if (v->is_number_unsigned()) {
      sim.seed = v->get<std::uint64_t>();
    } else if (v->is_number_integer() && v->get<long long>() >= 0) {
      sim.seed = static_cast<std::uint64_t>(v->get<long long>());
    } else {
      fail(path + ".seed", "expected a non-negative integer");
    }
  }
  sim.init_abstain_prob =
      get_number(obj, path, "init_abstain_prob", sim.init_abstain_prob);
  sim.capability_rate =
      get_number(obj, path, "capability_rate", sim.capability_rate);
  sim.epochs_per_batch =
      get_int(obj, path, "epochs_per_batch", sim.epochs_per_batch);
  return sim;
}

TaskBank parse_task_bank(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path, {"batch_prompts", "buckets"});
  TaskBank bank;
  bank.batch_prompts = get_int(obj, path, "batch_prompts", bank.batch_prompts);
  if (const json* v = find(obj, "buckets")) {
    if (!v->is_array()) fail(path + ".buckets", "expected an array");
    bank.buckets.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& b = (*v)[i];
      const std::string bpath = path + ".buckets[" + std::to_string(i) + "]";
      if (!b.is_object()) fail(bpath, "expected an object");
      reject_unknown_keys(b, bpath, {"solve_prob", "weight", "cap"});
      Bucket bucket;
      bucket.solve_prob = get_number(b, bpath, "solve_prob", bucket.solve_prob);
      bucket.weight = get_number(b, bpath, "weight", bucket.weight);
      if (const json* c = find(b, "cap")) {
        if (!c->is_number()) fail(bpath + ".cap", "expected a number");
        bucket.cap = c->get<double>();
      }
      bank.buckets.push_back(bucket);
    }
  }
  return bank;
}

SweepRequest parse_sweep(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"group_size", "scheme", "methods", "dura", "grid_density"});
  SweepRequest req;
  req.group_size = get_int(obj, path, "group_size", req.group_size);
  if (const json* v = find(obj, "scheme"))
    req.scheme = parse_scheme(*v, path + ".scheme", req.scheme);
  if (const json* v = find(obj, "methods")) {
    if (!v->is_array()) fail(path + ".methods", "expected an array");
    req.methods.clear();
    for (std::size_t i = 0; i < v->size(); ++i)
      req.methods.push_back(
          parse_method((*v)[i], path + ".methods[" + std::to_string(i) + "]"));
  }
  if (const json* v = find(obj, "dura"))
    req.dura = parse_dura(*v, path + ".dura", req.dura);
  req.grid_density = get_int(obj, path, "grid_density", req.grid_density);
  return req;
}

OutputSpec parse_output(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  reject_unknown_keys(obj, path, {"trajectory_path", "format"});
  OutputSpec out;
  out.trajectory_path =
      get_string(obj, path, "trajectory_path", out.trajectory_path);
  out.format = get_string(obj, path, "format", out.format);
  if (out.format != "csv" && out.format != "jsonl")
    fail(path + ".format", "expected \"csv\" or \"jsonl\"");
  return out;
}

json scheme_json(const RewardScheme& s) {
  return {{"r_right", s.r_right},
          {"r_wrong", s.r_wrong},
          {"r_uncertain", s.r_uncertain}};
}

json dura_json(const DuraParams& d) {
  return {{"w", d.w},
          {"eps", d.eps},
          {"lambda", d.lambda},
          {"alpha", d.alpha},
          {"enable_fusion", d.enable_fusion},
          {"enable_tanh", d.enable_tanh}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion)
    throw ConfigError("schema_version: expected " +
                      std::to_string(kSchemaVersion) + ", got " +
                      std::to_string(schema_version));
  try {
    sim.validate();
    task_bank.validate(sim.capability_rate > 0);
    if (sweep) sweep->dura.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  reject_unknown_keys(doc, "",
                      {"schema_version", "sim", "task_bank", "sweep", "output"});

  const json* version = find(doc, "schema_version");
  if (!version) throw ConfigError("schema_version is required");
  if (!version->is_number_integer())
    throw ConfigError("schema_version: expected an integer");

  ExperimentConfig cfg;
  cfg.schema_version = version->get<int>();
  if (const json* v = find(doc, "sim")) cfg.sim = parse_sim(*v, "sim");
  if (const json* v = find(doc, "task_bank"))
    cfg.task_bank = parse_task_bank(*v, "task_bank");
  if (const json* v = find(doc, "sweep")) cfg.sweep = parse_sweep(*v, "sweep");
  if (const json* v = find(doc, "output")) cfg.output = parse_output(*v, "output");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  json doc;
  doc["schema_version"] = config.schema_version;
  doc["sim"] = {{"method", std::string(method_name(config.sim.method))},
                {"scheme", scheme_json(config.sim.scheme)},
                {"group_size", config.sim.group_size},
                {"dura", dura_json(config.sim.dura)},
                {"lr", config.sim.lr},
                {"clip_eps", config.sim.clip_eps},
                {"kl_beta", config.sim.kl_beta},
                {"steps", config.sim.steps},
                {"seed", config.sim.seed},
                {"init_abstain_prob", config.sim.init_abstain_prob},
                {"capability_rate", config.sim.capability_rate},
                {"epochs_per_batch", config.sim.epochs_per_batch}};
  json buckets = json::array();
  for (const Bucket& b : config.task_bank.buckets) {
    json bucket = {{"solve_prob", b.solve_prob}, {"weight", b.weight}};
    if (b.cap) bucket["cap"] = *b.cap;
    buckets.push_back(bucket);
  }
  doc["task_bank"] = {{"batch_prompts", config.task_bank.batch_prompts},
                      {"buckets", buckets}};
  if (config.sweep) {
    json methods = json::array();
    for (Method m : config.sweep->methods)
      methods.push_back(std::string(method_name(m)));
    doc["sweep"] = {{"group_size", config.sweep->group_size},
                    {"scheme", scheme_json(config.sweep->scheme)},
                    {"methods", methods},
                    {"dura", dura_json(config.sweep->dura)},
                    {"grid_density", config.sweep->grid_density}};
  }
  if (config.output)
    doc["output"] = {{"trajectory_path", config.output->trajectory_path},
                     {"format", config.output->format}};
  return doc.dump(2) + "\n";
}

}  // namespace ucpo
