#include "perfquant/config.hpp"

#include <fstream>
#include <set>

#include "perfquant/error.hpp"

namespace perfquant::config {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object, remembering which ones were asked for
// so that leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j_.is_object(), ErrorKind::schema, where() + " must be an object");
  }

  template <typename T>
  bool get(const std::string& key, T& out) {
    known_.insert(key);
    if (!j_.contains(key)) return false;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::schema, "key '" + name(key) + "' has the wrong type");
    }
    return true;
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) const { return j_.at(key); }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items())
      require(known_.count(item.key()) > 0, ErrorKind::schema, "unknown key '" + name(item.key()) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

void schema_check(bool ok, const std::string& message) { require(ok, ErrorKind::schema, message); }

// Runs a module-level validator and reports its failure as a schema error.
template <typename F>
void as_schema(const std::string& section, F&& validate) {
  try {
    validate();
  } catch (const Error& e) {
    fail(ErrorKind::schema, section + ": " + e.what());
  }
}

phantom::TissueClass parse_class(const json& j, const std::string& path) {
  Section s(j, path);
  phantom::TissueClass c;
  for (const char* key : {"name", "cbf", "cbv", "delay_s", "box"})
    schema_check(s.has(key), "missing key '" + s.name(key) + "'");
  s.get("name", c.name);
  s.get("cbf", c.cbf);
  s.get("cbv", c.cbv);
  s.get("delay_s", c.delay_s);
  s.get("lesion", c.lesion);
  std::array<int, 6> box{};
  s.get("box", box);
  c.box = {box[0], box[1], box[2], box[3], box[4], box[5]};
  s.finish();
  return c;
}

phantom::PhantomConfig parse_phantom(const json& j) {
  Section s(j, "phantom");
  phantom::PhantomConfig p;
  s.get("dims", p.dims);
  s.get("dt_s", p.dt_s);
  s.get("te_s", p.te_s);
  s.get("voxel_mm", p.voxel_mm);
  s.get("s0", p.s0);
  if (s.has("snr") && !s.at("snr").is_null()) {
    double snr = 0.0;
    s.get("snr", snr);
    schema_check(snr > 0.0, "phantom.snr must be > 0 or null");
    p.snr = snr;
  }
  s.get("seed", p.seed);
  if (s.has("aif")) {
    Section a(s.at("aif"), "phantom.aif");
    a.get("t0_s", p.aif.t0_s);
    a.get("alpha", p.aif.alpha);
    a.get("beta", p.aif.beta);
    a.get("amplitude", p.aif.amplitude);
    a.finish();
  }
  s.get("aif_unit_area", p.aif_unit_area);
  s.get("vof_delay_samples", p.vof_delay_samples);
  s.get("vof_area_ratio", p.vof_area_ratio);
  schema_check(s.has("classes"), "missing key 'phantom.classes'");
  const json& classes = s.at("classes");
  schema_check(classes.is_array() && !classes.empty(), "key 'phantom.classes' must be a nonempty array");
  for (std::size_t i = 0; i < classes.size(); ++i)
    p.classes.push_back(parse_class(classes[i], "phantom.classes[" + std::to_string(i) + "]"));
  s.finish();

  schema_check(p.s0 > 0.0, "phantom.s0 must be > 0");
  schema_check(p.vof_delay_samples >= 0, "phantom.vof_delay_samples must be >= 0");
  schema_check(p.vof_area_ratio > 0.0, "phantom.vof_area_ratio must be > 0");
  as_schema("phantom", [&] {
    p.header().validate();
    p.aif.validate();
    phantom::generate_truth(p);
  });
  return p;
}

}  // namespace

const phantom::PhantomConfig& RunConfig::require_phantom() const {
  require(phantom.has_value(), ErrorKind::schema, "missing key 'phantom.classes'");
  return *phantom;
}

RunConfig parse(const json& doc) {
  Section root(doc, "");
  RunConfig cfg;
  if (root.has("phantom")) cfg.phantom = parse_phantom(root.at("phantom"));
  if (root.has("kinetics")) {
    Section s(root.at("kinetics"), "kinetics");
    s.get("rho", cfg.kinetics.rho);
    s.get("h_lv", cfg.kinetics.h_lv);
    s.get("h_sv", cfg.kinetics.h_sv);
    s.get("x_scale", cfg.kinetics.x_scale);
    s.finish();
  }
  if (root.has("deconv")) {
    Section s(root.at("deconv"), "deconv");
    std::string mode = std::string(deconv::to_string(cfg.deconv.mode));
    s.get("mode", mode);
    as_schema("deconv", [&] { cfg.deconv.mode = deconv::mode_from_string(mode); });
    s.get("threshold_frac", cfg.deconv.threshold_frac);
    s.get("pad_factor", cfg.deconv.pad_factor);
    s.finish();
  }
  if (root.has("train")) {
    Section s(root.at("train"), "train");
    auto& t = cfg.train;
    s.get("lr", t.lr);
    s.get("batch", t.batch);
    s.get("max_epochs", t.max_epochs);
    s.get("patience", t.patience);
    s.get("stride", t.stride);
    s.get("ratio", t.ratio);
    s.get("w_phys", t.w_phys);
    s.get("dropout_p", t.dropout_p);
    s.get("seed", t.seed);
    s.get("val_frac", t.val_frac);
    s.finish();
  }
  if (root.has("preprocess")) {
    Section s(root.at("preprocess"), "preprocess");
    s.get("n_pre", cfg.n_pre);
    s.finish();
  }
  if (root.has("metrics")) {
    Section s(root.at("metrics"), "metrics");
    if (s.has("threshold")) {
      const json& t = s.at("threshold");
      if (t.is_string()) {
        schema_check(t.get<std::string>() == "auto", "metrics.threshold must be a number or \"auto\"");
        cfg.metrics.threshold_s.reset();
      } else {
        double v = 0.0;
        s.get("threshold", v);
        schema_check(v >= 0.0, "metrics.threshold must be >= 0");
        cfg.metrics.threshold_s = v;
      }
    }
    s.get("ssim_window", cfg.metrics.ssim_window);
    s.finish();
  }
  if (root.has("bench")) {
    Section s(root.at("bench"), "bench");
    s.get("batch", cfg.bench.batch);
    s.finish();
  }
  if (root.has("sweep")) {
    Section s(root.at("sweep"), "sweep");
    s.get("axis", cfg.sweep.axis);
    s.get("values", cfg.sweep.values);
    s.finish();
  }
  if (root.has("paths")) {
    Section s(root.at("paths"), "paths");
    auto path = [&](const char* key, std::optional<std::filesystem::path>& out) {
      std::string v;
      if (s.get(key, v)) out = v;
    };
    path("volume", cfg.paths.volume);
    path("brain", cfg.paths.brain);
    path("lesion", cfg.paths.lesion);
    path("aif", cfg.paths.aif);
    path("vof", cfg.paths.vof);
    path("truth", cfg.paths.truth);
    path("checkpoint", cfg.paths.checkpoint);
    path("estimate", cfg.paths.estimate);
    path("tmax", cfg.paths.tmax);
    s.finish();
  }
  root.finish();

  as_schema("kinetics", [&] { cfg.kinetics.validate(); });
  as_schema("deconv", [&] { cfg.deconv.validate(); });
  cfg.train.validate();
  schema_check(cfg.n_pre >= 1, "preprocess.n_pre must be >= 1");
  schema_check(cfg.metrics.ssim_window >= 1 && cfg.metrics.ssim_window % 2 == 1,
               "metrics.ssim_window must be a positive odd integer");
  schema_check(cfg.bench.batch >= 1, "bench.batch must be >= 1");
  schema_check(cfg.sweep.axis == "stride" || cfg.sweep.axis == "ratio" || cfg.sweep.axis == "w_phys" ||
                   cfg.sweep.axis == "lr",
               "sweep.axis must be one of stride, ratio, w_phys, lr");
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse(doc);
}

json to_json(const RunConfig& cfg) {
  json j;
  if (cfg.phantom) {
    const auto& p = *cfg.phantom;
    json classes = json::array();
    for (const auto& c : p.classes)
      classes.push_back({{"name", c.name},
                         {"cbf", c.cbf},
                         {"cbv", c.cbv},
                         {"delay_s", c.delay_s},
                         {"lesion", c.lesion},
                         {"box", {c.box.x0, c.box.x1, c.box.y0, c.box.y1, c.box.z0, c.box.z1}}});
    j["phantom"] = {{"dims", p.dims},
                    {"dt_s", p.dt_s},
                    {"te_s", p.te_s},
                    {"voxel_mm", p.voxel_mm},
                    {"s0", p.s0},
                    {"snr", p.snr ? json(*p.snr) : json(nullptr)},
                    {"seed", p.seed},
                    {"aif", {{"t0_s", p.aif.t0_s}, {"alpha", p.aif.alpha}, {"beta", p.aif.beta},
                             {"amplitude", p.aif.amplitude}}},
                    {"aif_unit_area", p.aif_unit_area},
                    {"vof_delay_samples", p.vof_delay_samples},
                    {"vof_area_ratio", p.vof_area_ratio},
                    {"classes", classes}};
  }
  j["kinetics"] = {{"rho", cfg.kinetics.rho},
                   {"h_lv", cfg.kinetics.h_lv},
                   {"h_sv", cfg.kinetics.h_sv},
                   {"x_scale", cfg.kinetics.x_scale}};
  j["deconv"] = {{"mode", std::string(deconv::to_string(cfg.deconv.mode))},
                 {"threshold_frac", cfg.deconv.threshold_frac},
                 {"pad_factor", cfg.deconv.pad_factor}};
  const auto& t = cfg.train;
  j["train"] = {{"lr", t.lr},         {"batch", t.batch},         {"max_epochs", t.max_epochs},
                {"patience", t.patience}, {"stride", t.stride},   {"ratio", t.ratio},
                {"w_phys", t.w_phys}, {"dropout_p", t.dropout_p}, {"seed", t.seed},
                {"val_frac", t.val_frac}};
  j["preprocess"] = {{"n_pre", cfg.n_pre}};
  j["metrics"] = {{"threshold", cfg.metrics.threshold_s ? json(*cfg.metrics.threshold_s) : json("auto")},
                  {"ssim_window", cfg.metrics.ssim_window}};
  j["bench"] = {{"batch", cfg.bench.batch}};
  j["sweep"] = {{"axis", cfg.sweep.axis}, {"values", cfg.sweep.values}};
  json paths = json::object();
  auto put = [&](const char* key, const std::optional<std::filesystem::path>& p) {
    if (p) paths[key] = p->string();
  };
  put("volume", cfg.paths.volume);
  put("brain", cfg.paths.brain);
  put("lesion", cfg.paths.lesion);
  put("aif", cfg.paths.aif);
  put("vof", cfg.paths.vof);
  put("truth", cfg.paths.truth);
  put("checkpoint", cfg.paths.checkpoint);
  put("estimate", cfg.paths.estimate);
  put("tmax", cfg.paths.tmax);
  j["paths"] = paths;
  return j;
}

}  // namespace perfquant::config
