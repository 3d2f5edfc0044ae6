#include "graspkit/bridge.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace graspkit {

namespace {

constexpr char kCheckpointMagic[8] = {'G', 'K', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError("checkpoint truncated");
  return v;
}

template <typename F>
void zip(BridgeParams<double>& a, const BridgeParams<double>& b, F&& f) {
  std::vector<double*> dst;
  a.for_each([&](const char*, auto& t) { dst.push_back(t.data()); });
  std::size_t k = 0;
  b.for_each([&](const char*, const auto& t) { f(dst[k++], t.data(), t.size()); });
}

}  // namespace

BridgeDims BridgeDims::tiny(int width) {
  BridgeDims d;
  d.global_in = 2 * width;
  d.language_in = 2 * width + 1;
  d.local_in = width;
  d.global_hidden = d.language_hidden = width;
  d.mix_out = d.local_out = width;
  d.head_hidden = d.embed_dim = d.match_hidden = width;
  return d;
}

std::size_t PairBatch::positives() const { return static_cast<std::size_t>(std::count(match.begin(), match.end(), 1)); }
std::size_t PairBatch::negatives() const { return match.size() - positives(); }

void LossConfig::validate() const {
  if (!(delta_p > 0.0) || !(delta_n > delta_p)) throw DomainError("margins must satisfy delta_n > delta_p > 0");
  if (!(lambda > 0.0)) throw DomainError("lambda must be > 0");
}

TrainResult train_overfit(const std::vector<TrainingExample<double>>& examples, const BridgeDims& dims,
                          const LossConfig& config, int steps, double lr, std::uint64_t seed) {
  if (steps < 0) throw DomainError("steps must be >= 0");
  TrainResult result;
  result.params = BridgeParams<double>::init(dims, seed);
  BridgeParams<double> grad;
  for (int step = 0; step <= steps; ++step) {
    const bool last = step == steps;
    const auto loss = bridge_loss(examples, result.params, config, last ? nullptr : &grad);
    if (!std::isfinite(loss.combined) || !std::isfinite(loss.global))
      throw Divergence("loss became non-finite at step " + std::to_string(step));
    result.log.push_back({step, loss.global, loss.embedding, loss.match, loss.combined});
    if (last) break;
    zip(result.params, grad, [lr](double* p, const double* g, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) p[i] -= lr * g[i];
    });
  }
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const BridgeParams<double>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kCheckpointMagic, 8);
  put_u32(out, kCheckpointVersion);
  std::uint32_t count = 0;
  params.for_each([&](const char*, const auto&) { ++count; });
  put_u32(out, count);
  params.for_each([&](const char* name, const auto& t) {
    const auto len = static_cast<std::uint32_t>(std::strlen(name));
    put_u32(out, len);
    out.write(name, len);
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        const float v = static_cast<float>(t(r, c));
        out.write(reinterpret_cast<const char*>(&v), 4);
      }
  });
  if (!out) throw IoError("failed writing " + path.string());
}

BridgeParams<double> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw SchemaVersionMismatch("not a checkpoint: " + path.string());
  if (get_u32(in) != kCheckpointVersion) throw SchemaVersionMismatch("unsupported checkpoint version");
  const auto count = get_u32(in);
  std::map<std::string, Eigen::MatrixXd> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name(get_u32(in), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) throw IoError("checkpoint truncated");
    const auto rows = get_u32(in), cols = get_u32(in);
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) {
        float v = 0;
        if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError("checkpoint truncated");
        m(r, c) = v;
      }
    tensors[name] = std::move(m);
  }
  auto shape = [&](const std::string& name) -> const Eigen::MatrixXd& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw SchemaVersionMismatch("checkpoint lacks tensor " + name);
    return it->second;
  };
  BridgeDims d;
  d.global_hidden = static_cast<int>(shape("global_enc.weight").rows());
  d.global_in = static_cast<int>(shape("global_enc.weight").cols());
  d.language_hidden = static_cast<int>(shape("language_enc.weight").rows());
  d.language_in = static_cast<int>(shape("language_enc.weight").cols());
  d.mix_out = static_cast<int>(shape("mix.weight").rows());
  d.local_out = static_cast<int>(shape("local.weight").rows());
  d.local_in = static_cast<int>(shape("local.weight").cols());
  d.head_hidden = static_cast<int>(shape("aff_hidden.weight").rows());
  d.embed_dim = static_cast<int>(shape("emb_out.weight").rows());
  d.match_hidden = static_cast<int>(shape("match_hidden.weight").rows());

  auto params = BridgeParams<double>::zeros(d);
  params.for_each([&](const char* name, auto& t) {
    const auto& m = shape(name);
    if (m.rows() != t.rows() || m.cols() != t.cols()) throw ShapeError(std::string("tensor shape mismatch: ") + name);
    t = m;
  });
  return params;
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "step,L_g,L_emb,L_match,combined\n";
  for (const auto& r : log)
    out << r.step << ',' << r.global << ',' << r.embedding << ',' << r.match << ',' << r.combined << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace graspkit
