#include <fstream>
#include <iomanip>
#include <sstream>

#include "agegloh/error.hpp"
#include "agegloh/mtl.hpp"

namespace agegloh {
namespace {

[[noreturn]] void malformed(int line, const std::string& what) {
  throw Error(ErrorCode::MalformedFile,
              "GLOHSEL line " + std::to_string(line) + ": " + what);
}

double parse_keyed(const std::string& text, const std::string& key, int line) {
  if (text.rfind(key + "=", 0) != 0) malformed(line, "expected " + key + "=");
  std::istringstream in(text.substr(key.size() + 1));
  double v = 0.0;
  if (!(in >> v) || !(in >> std::ws).eof()) malformed(line, "bad " + key + " value");
  return v;
}

}  // namespace

void write_selection(std::ostream& out, const SelectionResult& sel) {
  out << std::setprecision(17);
  out << "GLOHSEL 1\n";
  out << "lambda=" << sel.lambda << '\n';
  out << "epsilon=" << sel.epsilon << '\n';
  for (int k : sel.selected) {
    out << k;
    for (Eigen::Index l = 0; l < sel.W.cols(); ++l) out << ' ' << sel.W(k, l);
    out << '\n';
  }
}

void write_selection(const std::string& path, const SelectionResult& sel) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_selection(out, sel);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

SelectionResult read_selection(std::istream& in, Eigen::Index n_bins,
                               Eigen::Index n_tasks) {
  std::string text;
  int line = 1;
  if (!std::getline(in, text) || text != "GLOHSEL 1") malformed(line, "bad header");
  SelectionResult sel;
  ++line;
  if (!std::getline(in, text)) malformed(line, "missing lambda");
  sel.lambda = parse_keyed(text, "lambda", line);
  ++line;
  if (!std::getline(in, text)) malformed(line, "missing epsilon");
  sel.epsilon = parse_keyed(text, "epsilon", line);

  sel.W = WeightMatrix::Zero(n_bins, n_tasks);
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::istringstream row(text);
    long long k = -1;
    if (!(row >> k) || k < 0 || k >= n_bins) malformed(line, "bad bin index");
    if (!sel.selected.empty() && k <= sel.selected.back())
      malformed(line, "bins must be strictly ascending");
    for (Eigen::Index l = 0; l < n_tasks; ++l) {
      if (!(row >> sel.W(k, l))) malformed(line, "missing task weight");
    }
    if (!(row >> std::ws).eof()) malformed(line, "trailing data");
    sel.selected.push_back(static_cast<int>(k));
  }
  return sel;
}

SelectionResult read_selection(const std::string& path, Eigen::Index n_bins,
                               Eigen::Index n_tasks) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path);
  return read_selection(in, n_bins, n_tasks);
}

}  // namespace agegloh
