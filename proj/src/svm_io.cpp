#include <string>

#include "emotionpush/byte_io.hpp"
#include "emotionpush/crc32.hpp"
#include "emotionpush/error.hpp"
#include "emotionpush/svm.hpp"

namespace emotionpush::svm {
namespace {

constexpr std::string_view kMagic = "EPSVM";
constexpr std::size_t kHeaderBytes = 5 + 2;
constexpr std::size_t kCrcBytes = 4;

}  // namespace

std::string save_model(const SvmModel& model) {
  if (model.support_vectors.rows() != model.coeffs.size() ||
      (model.support_vectors.rows() > 0 && model.support_vectors.cols() != model.dim)) {
    throw InvalidArgument("save_model: support vector matrix does not match coefficients");
  }
  ByteWriter payload;
  payload.put_u64(model.dim);
  payload.put_f64(model.gamma);
  payload.put_f64(model.bias);
  payload.put_f64(model.platt_a);
  payload.put_f64(model.platt_b);
  payload.put_u64(model.coeffs.size());
  for (double c : model.coeffs) payload.put_f64(c);
  for (std::size_t i = 0; i < model.support_vectors.rows(); ++i) {
    for (double v : model.support_vectors.row(i)) payload.put_f64(v);
  }

  ByteWriter out;
  out.put_raw(kMagic);
  out.put_u16(kModelFormatVersion);
  out.put_raw(payload.bytes());
  out.put_u32(crc32(payload.bytes()));
  return out.take();
}

SvmModel load_model(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw ParseError("svm model: bad magic, not an EPSVM container");
  }
  if (bytes.size() < kHeaderBytes) {
    throw ChecksumError("svm model: truncated header");
  }
  ByteReader header(bytes.substr(kMagic.size(), 2));
  const std::uint16_t version = header.get_u16();
  if (version != kModelFormatVersion) {
    throw VersionError("svm model: unsupported format version " + std::to_string(version) + " (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  }
  if (bytes.size() < kHeaderBytes + kCrcBytes) {
    throw ChecksumError("svm model: truncated payload");
  }
  const std::string_view payload = bytes.substr(kHeaderBytes, bytes.size() - kHeaderBytes - kCrcBytes);
  ByteReader trailer(bytes.substr(bytes.size() - kCrcBytes));
  if (trailer.get_u32() != crc32(payload)) {
    throw ChecksumError("svm model: CRC-32 mismatch (corrupt or truncated payload)");
  }

  ByteReader in(payload);
  SvmModel model;
  model.dim = in.get_u64();
  model.gamma = in.get_f64();
  model.bias = in.get_f64();
  model.platt_a = in.get_f64();
  model.platt_b = in.get_f64();
  const std::uint64_t n_sv = in.get_u64();
  if (model.dim == 0 || n_sv > in.remaining() / 8 || (n_sv > 0 && model.dim > in.remaining() / 8 / n_sv)) {
    throw ChecksumError("svm model: payload sizes are inconsistent");
  }
  model.coeffs.resize(n_sv);
  for (auto& c : model.coeffs) c = in.get_f64();
  model.support_vectors = FeatureMatrix(n_sv, model.dim);
  for (std::size_t i = 0; i < n_sv; ++i) {
    for (double& v : model.support_vectors.row(i)) v = in.get_f64();
  }
  if (in.remaining() != 0) {
    throw ChecksumError("svm model: trailing bytes in payload");
  }
  return model;
}

}  // namespace emotionpush::svm
