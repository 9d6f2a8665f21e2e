#include "vrhmm/params.hpp"

namespace vrhmm {

int HmmParams::n_states() const {
  const int ne = vrhmm::n_states(emission);
  const int nt = vrhmm::n_states(transition);
  if (ne != nt) throw ConfigError("emission and transition state counts disagree");
  return ne;
}

Vector HmmParams::pack() const {
  Vector phi(dim());
  pack_theta(emission, phi.head(theta_dim()));
  pack_eta(transition, phi.tail(eta_dim()));
  return phi;
}

void HmmParams::unpack(const Eigen::Ref<const Vector>& phi) {
  if (phi.size() != dim()) throw ConfigError("parameter vector has wrong length");
  unpack_theta(emission, phi.head(theta_dim()));
  unpack_eta(transition, phi.tail(eta_dim()));
}

}  // namespace vrhmm
