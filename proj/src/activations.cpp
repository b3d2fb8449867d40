#include "agcnn/activations.hpp"

#include <algorithm>
#include <cctype>

namespace agcnn {

namespace detail {
void throw_unknown_activation() {
  throw Error(ErrorKind::config, "unknown activation kind");
}
}  // namespace detail

const char* activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::nlrelu: return "nlrelu";
    case ActivationKind::selu: return "selu";
    case ActivationKind::elu: return "elu";
    case ActivationKind::lrelu: return "lrelu";
    case ActivationKind::prelu: return "prelu";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::softplus: return "softplus";
  }
  return "unknown";
}

ActivationKind parse_activation(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "relu") return ActivationKind::relu;
  if (s == "nlrelu") return ActivationKind::nlrelu;
  if (s == "selu") return ActivationKind::selu;
  if (s == "elu") return ActivationKind::elu;
  if (s == "lrelu") return ActivationKind::lrelu;
  if (s == "prelu") return ActivationKind::prelu;
  if (s == "sigmoid") return ActivationKind::sigmoid;
  if (s == "softplus") return ActivationKind::softplus;
  throw Error(ErrorKind::config, "unknown activation: " + name);
}

}  // namespace agcnn
