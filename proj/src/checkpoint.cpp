#include "grn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace grn {
namespace {

constexpr const char* kMagic = "grn-checkpoint";
constexpr int kVersion = 1;

std::runtime_error format_error(const std::string& what) { return std::runtime_error("checkpoint: " + what); }

}  // namespace

void write_checkpoint(std::ostream& out, const NamedTensors& tensors) {
  out << kMagic << ' ' << kVersion << ' ' << tensors.size() << '\n';
  char buf[32];
  for (const auto& [name, t] : tensors) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("checkpoint: tensor names must be non-empty without whitespace");
    out << name << ' ' << t.rank();
    for (std::size_t e : t.shape()) out << ' ' << e;
    out << '\n';
    const std::size_t cols = t.rank() == 0 ? 1 : t.shape().back();
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t[i]);
      out << buf << ((i + 1) % cols == 0 ? '\n' : ' ');
    }
  }
  if (!out) throw format_error("write failed");
}

NamedTensors read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version >> count) || magic != kMagic) throw format_error("missing header");
  if (version != kVersion) throw format_error("unsupported version " + std::to_string(version));
  NamedTensors out;
  for (std::size_t k = 0; k < count; ++k) {
    std::string name;
    std::size_t rank = 0;
    if (!(in >> name >> rank)) throw format_error("truncated tensor header");
    Shape shape(rank);
    for (auto& e : shape)
      if (!(in >> e)) throw format_error("bad extent for " + name);
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::string token;
      if (!(in >> token)) throw format_error("truncated values for " + name);
      std::size_t used = 0;
      try {
        t[i] = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) throw format_error("bad value '" + token + "' in " + name);
    }
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void save_checkpoint(const std::string& path, const NamedTensors& tensors) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(out, tensors);
}

NamedTensors load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_checkpoint(in);
}

const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw std::out_of_range("checkpoint has no tensor named " + name);
}

}  // namespace grn
