#include "agegloh/feature_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "agegloh/error.hpp"

namespace agegloh {
namespace {

constexpr std::array<char, 4> kMagic{'G', 'F', 'V', '1'};

void put_u32(std::array<char, 4>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(const char* buf) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace

void write_gfv1(std::ostream& out, const Eigen::MatrixXd& rows) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (static_cast<std::uint64_t>(rows.rows()) > kMax ||
      static_cast<std::uint64_t>(rows.cols()) > kMax) {
    throw Error(ErrorCode::InvalidParams, "feature matrix too large for GFV1");
  }
  out.write(kMagic.data(), 4);
  std::array<char, 4> buf{};
  put_u32(buf, static_cast<std::uint32_t>(rows.rows()));
  out.write(buf.data(), 4);
  put_u32(buf, static_cast<std::uint32_t>(rows.cols()));
  out.write(buf.data(), 4);

  std::vector<char> line(static_cast<std::size_t>(rows.cols()) * 4);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(rows(r, c))));
      std::memcpy(line.data() + c * 4, buf.data(), 4);
    }
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing GFV1 data");
}

void write_gfv1(const std::filesystem::path& path, const Eigen::MatrixXd& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  write_gfv1(out, rows);
}

Eigen::MatrixXd read_gfv1(std::istream& in) {
  std::array<char, 12> header{};
  in.read(header.data(), 12);
  if (in.gcount() != 12 || std::memcmp(header.data(), kMagic.data(), 4) != 0) {
    throw Error(ErrorCode::MalformedFile, "missing GFV1 header");
  }
  const std::uint32_t n = get_u32(header.data() + 4);
  const std::uint32_t k = get_u32(header.data() + 8);

  Eigen::MatrixXd rows(n, k);
  std::vector<char> line(static_cast<std::size_t>(k) * 4);
  for (std::uint32_t r = 0; r < n; ++r) {
    in.read(line.data(), static_cast<std::streamsize>(line.size()));
    if (static_cast<std::size_t>(in.gcount()) != line.size()) {
      throw Error(ErrorCode::MalformedFile,
                  "GFV1 data truncated at row " + std::to_string(r));
    }
    for (std::uint32_t c = 0; c < k; ++c) {
      rows(r, c) = std::bit_cast<float>(get_u32(line.data() + c * 4));
    }
  }
  return rows;
}

Eigen::MatrixXd read_gfv1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  try {
    return read_gfv1(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace agegloh
