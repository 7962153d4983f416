#pragma once

// Bidirectional LSTM with a linear output layer of N+1 units, exact BPTT,
// seeded initialization and the versioned model file.

#include "scribe/features.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace scribe {

enum class Direction { kForward, kBackward };

/// One layer of single-cell memory blocks with forget gates, no peepholes.
/// Rows of W come in four blocks of H: input gate, forget gate, output gate,
/// cell input. Columns: [external input (D) | recurrent (H) | bias].
struct LstmLayerParams {
  Matrix W;

  Eigen::Index hidden() const { return W.rows() / 4; }
  Eigen::Index input_size() const { return W.cols() - hidden() - 1; }
};

inline double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// Activations kept for BPTT, rows in input (not processing) order.
struct LstmTrace {
  Matrix gates;  // T x 4H, after squashing: i, f, o, g
  Matrix cell;   // T x H
  Matrix hidden; // T x H
  Direction direction = Direction::kForward;
};

namespace detail {

inline void check_lstm(const LstmLayerParams& p, const Matrix& inputs) {
  if (p.W.rows() < 4 || p.W.rows() % 4 != 0) throw ConfigError("LSTM weight rows must be a positive multiple of 4");
  if (p.input_size() < 0 || p.input_size() != inputs.cols()) {
    throw DataError("LSTM expects " + std::to_string(p.input_size()) + " inputs per frame, got " +
                    std::to_string(inputs.cols()));
  }
  if (inputs.rows() < 1) throw DataError("LSTM input has no frames");
}

/// Frame index of processing step k.
inline Eigen::Index frame_at(Eigen::Index k, Eigen::Index T, Direction d) {
  return d == Direction::kForward ? k : T - 1 - k;
}

}  // namespace detail

inline LstmTrace lstm_trace(const LstmLayerParams& p, const Matrix& inputs, Direction direction) {
  detail::check_lstm(p, inputs);
  const Eigen::Index T = inputs.rows(), D = inputs.cols(), H = p.hidden();
  LstmTrace tr;
  tr.direction = direction;
  tr.gates.resize(T, 4 * H);
  tr.cell.resize(T, H);
  tr.hidden.resize(T, H);

  // Input projection and bias for all frames in one product.
  Matrix pre = inputs * p.W.leftCols(D).transpose();
  pre.rowwise() += p.W.col(D + H).transpose();
  const auto recurrent = p.W.middleCols(D, H);

  Vector h = Vector::Zero(H), c = Vector::Zero(H), a(4 * H);
  for (Eigen::Index k = 0; k < T; ++k) {
    const Eigen::Index t = detail::frame_at(k, T, direction);
    a = pre.row(t).transpose() + recurrent * h;
    for (Eigen::Index j = 0; j < 3 * H; ++j) a(j) = logistic(a(j));
    for (Eigen::Index j = 3 * H; j < 4 * H; ++j) a(j) = std::tanh(a(j));
    c = a.segment(H, H).cwiseProduct(c) + a.head(H).cwiseProduct(a.tail(H));
    h = a.segment(2 * H, H).cwiseProduct(c.array().tanh().matrix());
    tr.gates.row(t) = a.transpose();
    tr.cell.row(t) = c.transpose();
    tr.hidden.row(t) = h.transpose();
  }
  return tr;
}

/// T x H hidden outputs in input order.
inline Matrix lstm_forward(const LstmLayerParams& p, const Matrix& inputs, Direction direction) {
  return lstm_trace(p, inputs, direction).hidden;
}

/// Gradient of W given dLoss/dhidden (T x H, input order).
inline Matrix lstm_backward(const LstmLayerParams& p, const Matrix& inputs, const LstmTrace& tr, const Matrix& d_hidden) {
  const Eigen::Index T = inputs.rows(), D = inputs.cols(), H = p.hidden();
  if (d_hidden.rows() != T || d_hidden.cols() != H) throw DataError("LSTM hidden delta has the wrong shape");
  const auto recurrent = p.W.middleCols(D, H);

  Matrix d_pre(T, 4 * H);
  Matrix h_prev = Matrix::Zero(T, H);  // recurrent input seen at each frame
  Vector dh_next = Vector::Zero(H), dc_next = Vector::Zero(H), da(4 * H);
  for (Eigen::Index k = T - 1; k >= 0; --k) {
    const Eigen::Index t = detail::frame_at(k, T, tr.direction);
    const bool first = k == 0;
    const Eigen::Index tp = first ? t : detail::frame_at(k - 1, T, tr.direction);
    const Eigen::ArrayXd gt = tr.gates.row(t).transpose();
    const auto ig = gt.segment(0, H), fg = gt.segment(H, H), og = gt.segment(2 * H, H), cg = gt.segment(3 * H, H);
    const Eigen::ArrayXd c_prev = first ? Eigen::ArrayXd::Zero(H) : Eigen::ArrayXd(tr.cell.row(tp).transpose());
    const Eigen::ArrayXd tc = tr.cell.row(t).transpose().array().tanh();

    const Eigen::ArrayXd dh = d_hidden.row(t).transpose().array() + dh_next.array();
    const Eigen::ArrayXd dc = dh * og * (1.0 - tc.square()) + dc_next.array();
    da.segment(0, H) = (dc * cg * ig * (1.0 - ig)).matrix();
    da.segment(H, H) = (dc * c_prev * fg * (1.0 - fg)).matrix();
    da.segment(2 * H, H) = (dh * tc * og * (1.0 - og)).matrix();
    da.segment(3 * H, H) = (dc * ig * (1.0 - cg.square())).matrix();

    d_pre.row(t) = da.transpose();
    if (!first) h_prev.row(t) = tr.hidden.row(tp);
    dc_next = (dc * fg).matrix();
    dh_next = recurrent.transpose() * da;
  }
  Matrix grad(4 * H, D + H + 1);
  grad.leftCols(D).noalias() = d_pre.transpose() * inputs;
  grad.middleCols(D, H).noalias() = d_pre.transpose() * h_prev;
  grad.col(D + H) = d_pre.colwise().sum().transpose();
  return grad;
}

/// Everything needed to rebuild the input pipeline at inference time.
struct ModelConfig {
  std::size_t input_size = 14;
  std::size_t hidden = 50;
  std::string feature_set = "full";
  double window = 0.0;
  PreprocessConfig preprocess;

  friend bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.input_size == b.input_size && a.hidden == b.hidden && a.feature_set == b.feature_set &&
           a.window == b.window && a.preprocess.delta == b.preprocess.delta &&
           a.preprocess.target_height == b.preprocess.target_height &&
           a.preprocess.slant_correction_enabled == b.preprocess.slant_correction_enabled;
  }
};

/// Trainable tensors; also the shape of gradients and momentum buffers.
struct BlstmWeights {
  LstmLayerParams forward;
  LstmLayerParams backward;
  Matrix output;  // (N+1) x (2H+1), last column bias

  BlstmWeights zeros_like() const {
    return {{Matrix::Zero(forward.W.rows(), forward.W.cols())},
            {Matrix::Zero(backward.W.rows(), backward.W.cols())},
            Matrix::Zero(output.rows(), output.cols())};
  }

  /// Applies f to each tensor together with the matching tensor of `other`.
  template <typename F>
  void zip(BlstmWeights& other, F&& f) {
    f(forward.W, other.forward.W);
    f(backward.W, other.backward.W);
    f(output, other.output);
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(forward.W.size() + backward.W.size() + output.size());
  }

  std::vector<double> flatten() const {
    std::vector<double> v;
    v.reserve(parameter_count());
    for (const Matrix* m : {&forward.W, &backward.W, &output}) v.insert(v.end(), m->data(), m->data() + m->size());
    return v;
  }

  void unflatten(const std::vector<double>& v) {
    if (v.size() != parameter_count()) throw DataError("parameter vector has the wrong length");
    std::size_t at = 0;
    for (Matrix* m : {&forward.W, &backward.W, &output}) {
      std::copy(v.begin() + static_cast<std::ptrdiff_t>(at), v.begin() + static_cast<std::ptrdiff_t>(at + m->size()),
                m->data());
      at += static_cast<std::size_t>(m->size());
    }
  }

  bool all_finite() const { return forward.W.allFinite() && backward.W.allFinite() && output.allFinite(); }
};

struct BlstmModel {
  Alphabet alphabet;
  Standardizer standardizer;
  ModelConfig config;
  BlstmWeights weights;

  Eigen::Index hidden() const { return weights.forward.hidden(); }
  Eigen::Index output_size() const { return weights.output.rows(); }
};

struct BlstmTrace {
  LstmTrace forward;
  LstmTrace backward;
  Matrix outputs;  // T x (N+1), unnormalized
};

namespace detail {

inline void check_blstm(const BlstmWeights& w, const Matrix& inputs) {
  const Eigen::Index H = w.forward.hidden();
  if (w.backward.W.rows() != w.forward.W.rows() || w.backward.W.cols() != w.forward.W.cols()) {
    throw ConfigError("forward and backward LSTM layers differ in shape");
  }
  if (w.output.cols() != 2 * H + 1) throw ConfigError("output layer must have 2H+1 columns");
  if (inputs.cols() != w.forward.input_size()) {
    throw DataError("model expects " + std::to_string(w.forward.input_size()) + " features per frame, input has " +
                    std::to_string(inputs.cols()));
  }
}

}  // namespace detail

inline BlstmTrace blstm_trace(const BlstmWeights& w, const Matrix& inputs) {
  detail::check_blstm(w, inputs);
  const Eigen::Index H = w.forward.hidden();
  BlstmTrace tr;
  tr.forward = lstm_trace(w.forward, inputs, Direction::kForward);
  tr.backward = lstm_trace(w.backward, inputs, Direction::kBackward);
  tr.outputs = tr.forward.hidden * w.output.leftCols(H).transpose();
  tr.outputs.noalias() += tr.backward.hidden * w.output.middleCols(H, H).transpose();
  tr.outputs.rowwise() += w.output.col(2 * H).transpose();
  return tr;
}

inline Matrix blstm_forward(const BlstmWeights& w, const Matrix& inputs) { return blstm_trace(w, inputs).outputs; }

inline Matrix blstm_forward(const BlstmModel& model, const FeatureSequence& inputs) {
  return blstm_forward(model.weights, inputs.values);
}

/// Gradients of the loss whose partials w.r.t. the unnormalized outputs are `output_deltas`.
inline BlstmWeights blstm_backward(const BlstmWeights& w, const Matrix& inputs, const BlstmTrace& tr,
                                   const Matrix& output_deltas) {
  const Eigen::Index H = w.forward.hidden();
  if (output_deltas.rows() != inputs.rows() || output_deltas.cols() != w.output.rows()) {
    throw DataError("output deltas must be T x (N+1)");
  }
  BlstmWeights g;
  g.output.resize(w.output.rows(), w.output.cols());
  g.output.leftCols(H).noalias() = output_deltas.transpose() * tr.forward.hidden;
  g.output.middleCols(H, H).noalias() = output_deltas.transpose() * tr.backward.hidden;
  g.output.col(2 * H) = output_deltas.colwise().sum().transpose();
  const Matrix d_forward = output_deltas * w.output.leftCols(H);
  const Matrix d_backward = output_deltas * w.output.middleCols(H, H);
  g.forward.W = lstm_backward(w.forward, inputs, tr.forward, d_forward);
  g.backward.W = lstm_backward(w.backward, inputs, tr.backward, d_backward);
  return g;
}

inline BlstmWeights blstm_backward(const BlstmWeights& w, const Matrix& inputs, const Matrix& output_deltas) {
  return blstm_backward(w, inputs, blstm_trace(w, inputs), output_deltas);
}

/// Every weight i.i.d. uniform on [-range, range] from mt19937_64(seed).
inline BlstmWeights init_weights(std::size_t input_size, std::size_t hidden, std::size_t outputs, std::uint64_t seed,
                                 double range = 0.1) {
  if (hidden < 1) throw ConfigError("hidden size must be at least 1");
  if (outputs < 2) throw ConfigError("output layer needs at least one label and the blank");
  if (!(range > 0.0)) throw ConfigError("init range must be positive");
  const auto D = static_cast<Eigen::Index>(input_size), H = static_cast<Eigen::Index>(hidden);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-range, range);
  auto fill = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng);
    return m;
  };
  BlstmWeights w;
  w.forward.W = fill(4 * H, D + H + 1);
  w.backward.W = fill(4 * H, D + H + 1);
  w.output = fill(static_cast<Eigen::Index>(outputs), 2 * H + 1);
  return w;
}

inline BlstmModel init_model(const ModelConfig& config, const Alphabet& alphabet, std::uint64_t seed,
                             double range = 0.1) {
  BlstmModel m;
  m.alphabet = alphabet;
  m.config = config;
  m.standardizer.mean = Vector::Zero(static_cast<Eigen::Index>(config.input_size));
  m.standardizer.std = Vector::Ones(static_cast<Eigen::Index>(config.input_size));
  m.weights = init_weights(config.input_size, config.hidden, alphabet.size() + 1, seed, range);
  return m;
}

// ---------------------------------------------------------------------------
// Model file

inline constexpr char kModelMagic[12] = {'S', 'C', 'R', 'I', 'B', 'E', '-', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes_ += s;
  }
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  void vector(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  const std::string& bytes() const { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = bytes_.substr(at_, n);
    at_ += n;
    return s;
  }
  Matrix matrix() {
    const std::uint64_t r = u64(), c = u64();
    need(r * c * 8);
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }
  Vector vector() {
    const std::uint64_t n = u64();
    need(n * 8);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
    return v;
  }
  bool done() const { return at_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - at_) throw DataError("model payload truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
    at_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& bytes_;
  std::size_t at_ = 0;
};

}  // namespace detail

inline std::string serialize_model(const BlstmModel& m) {
  detail::ByteWriter p;
  p.u64(m.alphabet.size());
  for (const auto& s : m.alphabet.symbols()) p.str(s);
  p.u64(m.config.input_size);
  p.u64(m.config.hidden);
  p.str(m.config.feature_set);
  p.f64(m.config.window);
  p.f64(m.config.preprocess.delta);
  p.f64(m.config.preprocess.target_height);
  p.u64(m.config.preprocess.slant_correction_enabled ? 1 : 0);
  p.vector(m.standardizer.mean);
  p.vector(m.standardizer.std);
  p.matrix(m.weights.forward.W);
  p.matrix(m.weights.backward.W);
  p.matrix(m.weights.output);

  detail::ByteWriter header;
  std::string out(kModelMagic, sizeof kModelMagic);
  header.u32(kModelVersion);
  header.u64(p.bytes().size());
  header.u64(fnv1a64(p.bytes()));
  return out + header.bytes() + p.bytes();
}

inline BlstmModel deserialize_model(const std::string& bytes) {
  constexpr std::size_t kHeader = sizeof kModelMagic + 4 + 8 + 8;
  if (bytes.size() < sizeof kModelMagic || std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0) {
    throw DataError("not a SCRIBE-MODEL file");
  }
  if (bytes.size() < kHeader) throw DataError("model header truncated");
  const std::string header_bytes = bytes.substr(sizeof kModelMagic, kHeader - sizeof kModelMagic);
  detail::ByteReader header(header_bytes);
  const std::uint32_t version = header.u32();
  if (version != kModelVersion) {
    throw DataError("unsupported model version " + std::to_string(version) + " (expected " +
                    std::to_string(kModelVersion) + ")");
  }
  const std::uint64_t size = header.u64();
  const std::uint64_t checksum = header.u64();
  const std::string payload = bytes.substr(kHeader);
  if (payload.size() != size || fnv1a64(payload) != checksum) throw DataError("model checksum mismatch (file corrupt or truncated)");

  detail::ByteReader p(payload);
  BlstmModel m;
  std::vector<std::string> symbols(p.u64());
  for (auto& s : symbols) s = p.str();
  m.alphabet = Alphabet(std::move(symbols));
  m.config.input_size = p.u64();
  m.config.hidden = p.u64();
  m.config.feature_set = p.str();
  m.config.window = p.f64();
  m.config.preprocess.delta = p.f64();
  m.config.preprocess.target_height = p.f64();
  m.config.preprocess.slant_correction_enabled = p.u64() != 0;
  m.standardizer.mean = p.vector();
  m.standardizer.std = p.vector();
  m.weights.forward.W = p.matrix();
  m.weights.backward.W = p.matrix();
  m.weights.output = p.matrix();
  if (!p.done()) throw DataError("trailing bytes in model payload");

  const auto D = static_cast<Eigen::Index>(m.config.input_size), H = static_cast<Eigen::Index>(m.config.hidden);
  const bool shapes_ok = m.standardizer.mean.size() == D && m.standardizer.std.size() == D &&
                         m.weights.forward.W.rows() == 4 * H && m.weights.forward.W.cols() == D + H + 1 &&
                         m.weights.backward.W.rows() == 4 * H && m.weights.backward.W.cols() == D + H + 1 &&
                         m.weights.output.rows() == static_cast<Eigen::Index>(m.alphabet.size() + 1) &&
                         m.weights.output.cols() == 2 * H + 1;
  if (!shapes_ok) throw DataError("model tensors inconsistent with the stored configuration");
  return m;
}

inline void save_model(const BlstmModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model " + path.string());
  const std::string bytes = serialize_model(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model " + path.string());
}

inline BlstmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace scribe
