#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "sparse_consist/errors.hpp"
#include "sparse_consist/operators.hpp"

namespace sparse_consist {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', 'C', 'D'};
// Refuse headers that would allocate absurd amounts of memory.
constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 31;

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> bytes{};
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_le(std::istream& in, int n_bytes, const std::string& path) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), n_bytes);
  if (in.gcount() != n_bytes) throw InputError(path + ": truncated dictionary file");
  std::uint64_t v = 0;
  for (int i = n_bytes - 1; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
  return v;
}

std::vector<double> parse_numbers(const std::string& line, const std::string& path,
                                  std::size_t line_no) {
  std::vector<double> values;
  std::string token;
  std::istringstream fields(line);
  while (std::getline(fields, token, ',')) {
    std::istringstream words(token);
    std::string word;
    while (words >> word) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(word, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != word.size() || !std::isfinite(v)) {
        throw InputError(path + ":" + std::to_string(line_no) + ": not a finite number: '" + word +
                         "'");
      }
      values.push_back(v);
    }
  }
  return values;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InputError(path + ": cannot open for reading");
  return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw InputError(path + ": cannot open for writing");
  return out;
}

}  // namespace

void write_dictionary_binary(const std::string& path, const Dictionary& dict) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kDictionaryFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(dict.rows()));
  put_u32(out, static_cast<std::uint32_t>(dict.cols()));
  const RowMatrix& d = dict.matrix();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) put_f64(out, d(i, j));
  }
  if (!out) throw InputError(path + ": write failed");
}

Dictionary read_dictionary_binary(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) throw InputError(path + ": missing SPCD magic");
  const auto version = get_le(in, 4, path);
  if (version != kDictionaryFormatVersion) {
    throw InputError(path + ": unsupported dictionary format version " + std::to_string(version));
  }
  const auto n = get_le(in, 4, path);
  const auto m = get_le(in, 4, path);
  if (n == 0 || m == 0 || n * m > kMaxEntries) {
    throw InputError(path + ": invalid dictionary shape " + std::to_string(n) + " x " +
                     std::to_string(m));
  }
  RowMatrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      d(i, j) = std::bit_cast<double>(get_le(in, 8, path));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError(path + ": trailing bytes after dictionary payload");
  }
  return Dictionary(std::move(d));
}

Dictionary read_dictionary_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto values = parse_numbers(line, path, line_no);
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw InputError(path + ":" + std::to_string(line_no) + ": ragged CSV row");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw InputError(path + ": empty dictionary CSV");
  RowMatrix d(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return Dictionary(std::move(d));
}

Dictionary read_dictionary(const std::string& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() == 4 && magic == kMagic) return read_dictionary_binary(path);
  return read_dictionary_csv(path);
}

void write_dictionary_csv(const std::string& path, const Dictionary& dict) {
  auto out = open_out(path);
  out << std::setprecision(17);
  const RowMatrix& d = dict.matrix();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) out << (j ? "," : "") << d(i, j);
    out << '\n';
  }
  if (!out) throw InputError(path + ": write failed");
}

Eigen::VectorXd read_vector(const std::string& path) {
  auto in = open_in(path);
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = parse_numbers(line, path, line_no);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (values.empty()) throw InputError(path + ": no samples");
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_vector(const std::string& path, const Eigen::VectorXd& v) {
  auto out = open_out(path);
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
  if (!out) throw InputError(path + ": write failed");
}

}  // namespace sparse_consist
