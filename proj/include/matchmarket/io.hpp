// JSON file formats.
//
//   market:   {"num_candidates": C, "num_jobs": J, "p_cj": [[...]], "p_jc": [[...]]}
//   policy:   {"type": "deterministic", "rankings": [[int]]}
//           | {"type": "stochastic",    "matrices": [[[float]]]}
//   equilibrium: {"mu": [[...]], "mu_c0": [...], "mu_0j": [...],
//                 "beta": f, "iterations": i, "residual": f, "converged": b}
//   features: {"phi1": [[...]], "phi2": [[...]], "psi1": [[...]], "psi2": [[...]]}
//   embeddings: {"dim": d, "candidate_vectors": [[...]], "job_vectors": [[...]]}
//   decompositions: {"decompositions": [{"terms": [{"weight": f,
//                    "permutation": [int]}]}]}
//   result:   {"mean": f, "stderr": f, "gini_candidates": f,
//              "gini_employers": f, "n_sims": i, "seed": i}
//
// Matrices are arrays of rows.  Floats round-trip exactly (shortest
// representation).  Indices are 0-based.

#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "matchmarket/bvn.hpp"
#include "matchmarket/core.hpp"
#include "matchmarket/embedding.hpp"
#include "matchmarket/simulator.hpp"
#include "matchmarket/tu.hpp"

namespace matchmarket {

using PolicyVariant = std::variant<DeterministicPolicy, StochasticPolicy<double>>;

namespace io {

using Json = nlohmann::json;

inline Json matrix_to_json(const MatrixX<double>& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixX<double> matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw std::invalid_argument(what + ": expected a non-empty array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j.front().size());
  MatrixX<double> m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw std::invalid_argument(what + ": ragged rows");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Json vector_to_json(const VectorX<double>& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline VectorX<double> vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw std::invalid_argument(what + ": expected an array");
  VectorX<double> v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i)
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline Json market_to_json(const PreferenceMatrices<double>& prefs) {
  return Json{{"num_candidates", prefs.num_candidates()},
              {"num_jobs", prefs.num_jobs()},
              {"p_cj", matrix_to_json(prefs.p_cj)},
              {"p_jc", matrix_to_json(prefs.p_jc)}};
}

inline PreferenceMatrices<double> market_from_json(const Json& j) {
  PreferenceMatrices<double> prefs;
  prefs.p_cj = matrix_from_json(j.at("p_cj"), "market.p_cj");
  prefs.p_jc = matrix_from_json(j.at("p_jc"), "market.p_jc");
  const auto num_candidates = j.at("num_candidates").get<Index>();
  const auto num_jobs = j.at("num_jobs").get<Index>();
  if (prefs.num_candidates() != num_candidates || prefs.num_jobs() != num_jobs)
    throw std::invalid_argument(
        "market: num_candidates/num_jobs disagree with matrix shapes");
  prefs.validate();
  return prefs;
}

inline Json policy_to_json(const DeterministicPolicy& policy) {
  Json rankings = Json::array();
  for (const Ranking& r : policy.rankings) rankings.push_back(r);
  return Json{{"type", "deterministic"}, {"rankings", std::move(rankings)}};
}

inline Json policy_to_json(const StochasticPolicy<double>& policy) {
  Json matrices = Json::array();
  for (const auto& m : policy.matrices) matrices.push_back(matrix_to_json(m));
  return Json{{"type", "stochastic"}, {"matrices", std::move(matrices)}};
}

inline PolicyVariant policy_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "deterministic") {
    DeterministicPolicy policy;
    for (const Json& row : j.at("rankings")) {
      Ranking r;
      for (const Json& x : row) r.push_back(x.get<Index>());
      policy.rankings.push_back(std::move(r));
    }
    if (policy.rankings.empty())
      throw std::invalid_argument("policy: empty rankings");
    policy.validate(static_cast<Index>(policy.rankings.front().size()));
    return policy;
  }
  if (type == "stochastic") {
    StochasticPolicy<double> policy;
    for (const Json& m : j.at("matrices"))
      policy.matrices.push_back(matrix_from_json(m, "policy.matrices"));
    policy.validate();
    return policy;
  }
  throw std::invalid_argument("policy: unknown type \"" + type + "\"");
}

inline Json equilibrium_to_json(const EquilibriumMatching<double>& eq) {
  return Json{{"mu", matrix_to_json(eq.mu)},
              {"mu_c0", vector_to_json(eq.mu_c0)},
              {"mu_0j", vector_to_json(eq.mu_0j)},
              {"beta", eq.beta},
              {"iterations", eq.iterations},
              {"residual", eq.residual},
              {"converged", eq.converged}};
}

inline EquilibriumMatching<double> equilibrium_from_json(const Json& j) {
  EquilibriumMatching<double> eq;
  eq.mu = matrix_from_json(j.at("mu"), "equilibrium.mu");
  eq.mu_c0 = vector_from_json(j.at("mu_c0"), "equilibrium.mu_c0");
  eq.mu_0j = vector_from_json(j.at("mu_0j"), "equilibrium.mu_0j");
  eq.beta = j.at("beta").get<double>();
  eq.iterations = j.at("iterations").get<Index>();
  eq.residual = j.at("residual").get<double>();
  eq.converged = j.at("converged").get<bool>();
  if (eq.mu.rows() != eq.mu_c0.size() || eq.mu.cols() != eq.mu_0j.size())
    throw std::invalid_argument("equilibrium: inconsistent shapes");
  return eq;
}

inline Json features_to_json(const FeatureMaps<double>& maps) {
  return Json{{"phi1", matrix_to_json(maps.phi1)},
              {"phi2", matrix_to_json(maps.phi2)},
              {"psi1", matrix_to_json(maps.psi1)},
              {"psi2", matrix_to_json(maps.psi2)}};
}

inline FeatureMaps<double> features_from_json(const Json& j) {
  FeatureMaps<double> maps;
  maps.phi1 = matrix_from_json(j.at("phi1"), "features.phi1");
  maps.phi2 = matrix_from_json(j.at("phi2"), "features.phi2");
  maps.psi1 = matrix_from_json(j.at("psi1"), "features.psi1");
  maps.psi2 = matrix_from_json(j.at("psi2"), "features.psi2");
  return maps;
}

inline Json embeddings_to_json(const EmbeddingSet<double>& emb) {
  return Json{{"dim", emb.dim()},
              {"candidate_vectors", matrix_to_json(emb.candidate_vectors)},
              {"job_vectors", matrix_to_json(emb.job_vectors)}};
}

inline EmbeddingSet<double> embeddings_from_json(const Json& j) {
  EmbeddingSet<double> emb;
  emb.candidate_vectors =
      matrix_from_json(j.at("candidate_vectors"), "embeddings.candidate_vectors");
  emb.job_vectors = matrix_from_json(j.at("job_vectors"), "embeddings.job_vectors");
  if (emb.candidate_vectors.cols() != emb.job_vectors.cols())
    throw std::invalid_argument("embeddings: dimension mismatch between sides");
  if (j.contains("dim") && j.at("dim").get<Index>() != emb.dim())
    throw std::invalid_argument("embeddings: dim disagrees with vectors");
  return emb;
}

inline Json decompositions_to_json(
    const std::vector<BvnDecomposition<double>>& decompositions) {
  Json list = Json::array();
  for (const auto& d : decompositions) {
    Json terms = Json::array();
    for (const auto& term : d.terms)
      terms.push_back(
          Json{{"weight", term.weight}, {"permutation", term.permutation}});
    list.push_back(Json{{"terms", std::move(terms)}});
  }
  return Json{{"decompositions", std::move(list)}};
}

inline std::vector<BvnDecomposition<double>> decompositions_from_json(
    const Json& j) {
  std::vector<BvnDecomposition<double>> decompositions;
  for (const Json& d : j.at("decompositions")) {
    BvnDecomposition<double> decomp;
    for (const Json& term : d.at("terms")) {
      BvnTerm<double> t;
      t.weight = term.at("weight").get<double>();
      for (const Json& x : term.at("permutation"))
        t.permutation.push_back(x.get<Index>());
      decomp.terms.push_back(std::move(t));
    }
    if (decomp.terms.empty())
      throw std::invalid_argument("decompositions: empty term list");
    decompositions.push_back(std::move(decomp));
  }
  return decompositions;
}

inline Json result_to_json(const SWEstimate<double>& estimate,
                           double gini_candidates, double gini_employers) {
  return Json{{"mean", estimate.mean},
              {"stderr", estimate.standard_error},
              {"gini_candidates", gini_candidates},
              {"gini_employers", gini_employers},
              {"n_sims", estimate.n_sims},
              {"seed", estimate.seed}};
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  return Json::parse(in);
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("failed writing file: " + path);
}

}  // namespace io
}  // namespace matchmarket
