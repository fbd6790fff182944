#pragma once

#include <map>
#include <optional>
#include <string>

#include "charpq/decompose.hpp"
#include "charpq/scenario.hpp"

namespace charpq::detail {

Json to_json(const Vec& v);
Json to_json(const Matrix& m);
Json rows_json(const Subspace& s);
Vec vec_from(const Json& j, std::size_t dim, std::uint32_t p);
Matrix matrix_from(const Json& j, std::uint32_t p);

/// Everything a certificate may refer to, rebuilt from report["artifacts"].
struct CertContext {
  std::map<std::string, FdAlgebra> algebras;
  std::map<std::string, PoissonTruncation> poisson;
  std::map<std::string, std::pair<std::string, Subspace>> subspaces;  // name -> (algebra, space)
  std::vector<W1Module> modules;

  const FdAlgebra& algebra(const std::string& name) const;
  const PoissonTruncation& poisson_algebra(const std::string& name) const;
  const Subspace& subspace(const std::string& name) const;
};

/// Throws Error(Parse) on missing or ill-typed artifacts.
CertContext load_context(const Json& artifacts);

/// nullopt when the certificate holds, else the reason it fails. Throws
/// Error(Parse) for an unknown type or missing fields.
std::optional<std::string> check_certificate(const CertContext& ctx, const Json& cert);

}  // namespace charpq::detail
