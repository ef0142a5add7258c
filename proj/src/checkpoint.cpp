#include "clgp/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace clgp {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kFormat = "clgp-checkpoint";
constexpr int kVersion = 1;

void require_finite(double v, const std::string& where) {
  if (!std::isfinite(v)) throw CheckpointError("non-finite value in " + where);
}

json matrix_json(const Matrix& m, const std::string& where) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      require_finite(m(r, c), where);
      data.push_back(m(r, c));
    }
  }
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from(const json& j, const std::string& where) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw CheckpointError("shape mismatch in " + where);
  }
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double v = data[i++].get<double>();
      require_finite(v, where);
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace

std::string checkpoint_to_string(const VariationalState& state, const CategoricalDataset& data) {
  state.validate_against(data);
  const Parameters& p = state.params;
  require_finite(state.sigma_x, "sigma_x");
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["shape"] = {{"rows", p.rows()},
                  {"latent_dim", p.latent_dim()},
                  {"inducing", p.inducing()},
                  {"variables", p.variables()}};
  doc["cardinalities"] = data.cardinalities();
  doc["variable_names"] = data.names();
  doc["seed"] = state.seed;
  doc["sigma_x"] = state.sigma_x;
  doc["include_kl_u"] = state.include_kl_u;
  doc["m"] = matrix_json(p.m, "m");
  doc["log_s"] = matrix_json(p.log_s, "log_s");
  doc["Z"] = matrix_json(p.Z, "Z");
  json vars = json::array();
  for (int d = 0; d < p.variables(); ++d) {
    const std::string tag = "variable " + std::to_string(d);
    json v;
    v["mu"] = matrix_json(p.mu[d], tag + " mu");
    v["L_raw"] = matrix_json(p.L_raw[d], tag + " L_raw");
    json k;
    k["type"] = kernels::kind_name(kernels::kind_of(p.kernel[d]));
    if (const auto* rbf = std::get_if<kernels::ArdRbfParams>(&p.kernel[d])) {
      require_finite(rbf->log_signal_variance, tag + " kernel");
      k["log_signal_variance"] = rbf->log_signal_variance;
      json ls = json::array();
      for (Eigen::Index q = 0; q < rbf->log_lengthscales.size(); ++q) {
        require_finite(rbf->log_lengthscales(q), tag + " kernel");
        ls.push_back(rbf->log_lengthscales(q));
      }
      k["log_lengthscales"] = std::move(ls);
    } else {
      const auto& lin = std::get<kernels::LinearKernelParams>(p.kernel[d]);
      require_finite(lin.log_signal_variance, tag + " kernel");
      require_finite(lin.log_bias_variance, tag + " kernel");
      k["log_signal_variance"] = lin.log_signal_variance;
      k["log_bias_variance"] = lin.log_bias_variance;
      k["use_bias"] = lin.use_bias;
    }
    v["kernel"] = std::move(k);
    vars.push_back(std::move(v));
  }
  doc["variables"] = std::move(vars);
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw CheckpointError("not a clgp checkpoint");
    if (doc.at("version").get<int>() != kVersion) {
      throw CheckpointError("unsupported checkpoint version " + doc.at("version").dump());
    }
    Checkpoint cp;
    cp.cardinalities = doc.at("cardinalities").get<std::vector<int>>();
    cp.variable_names = doc.at("variable_names").get<std::vector<std::string>>();
    VariationalState& s = cp.state;
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.sigma_x = doc.at("sigma_x").get<double>();
    require_finite(s.sigma_x, "sigma_x");
    s.include_kl_u = doc.at("include_kl_u").get<bool>();
    Parameters& p = s.params;
    p.m = matrix_from(doc.at("m"), "m");
    p.log_s = matrix_from(doc.at("log_s"), "log_s");
    p.Z = matrix_from(doc.at("Z"), "Z");
    for (const auto& v : doc.at("variables")) {
      p.mu.push_back(matrix_from(v.at("mu"), "mu"));
      p.L_raw.push_back(matrix_from(v.at("L_raw"), "L_raw"));
      const auto& k = v.at("kernel");
      const auto type = k.at("type").get<std::string>();
      if (type == kernels::kind_name(kernels::KernelKind::ArdRbf)) {
        kernels::ArdRbfParams rbf;
        rbf.log_signal_variance = k.at("log_signal_variance").get<double>();
        const auto ls = k.at("log_lengthscales").get<std::vector<double>>();
        rbf.log_lengthscales = Eigen::Map<const Vector>(ls.data(), static_cast<Eigen::Index>(ls.size()));
        p.kernel.emplace_back(std::move(rbf));
      } else if (type == kernels::kind_name(kernels::KernelKind::Linear)) {
        kernels::LinearKernelParams lin;
        lin.log_signal_variance = k.at("log_signal_variance").get<double>();
        lin.log_bias_variance = k.at("log_bias_variance").get<double>();
        lin.use_bias = k.at("use_bias").get<bool>();
        p.kernel.emplace_back(lin);
      } else {
        throw CheckpointError("unknown kernel type '" + type + "'");
      }
    }
    const auto& shape = doc.at("shape");
    if (shape.at("rows").get<int>() != p.rows() || shape.at("latent_dim").get<int>() != p.latent_dim() ||
        shape.at("inducing").get<int>() != p.inducing() ||
        shape.at("variables").get<int>() != p.variables() ||
        static_cast<int>(cp.cardinalities.size()) != p.variables() ||
        cp.variable_names.size() != cp.cardinalities.size()) {
      throw CheckpointError("checkpoint shape metadata disagrees with its contents");
    }
    CategoricalDataset probe(p.rows(), cp.cardinalities, cp.variable_names);
    try {
      s.validate_against(probe);
    } catch (const std::exception& e) {
      throw CheckpointError(std::string("inconsistent checkpoint: ") + e.what());
    }
    return cp;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const VariationalState& state,
                     const CategoricalDataset& data) {
  const std::string text = checkpoint_to_string(state, data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out << text;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace clgp
