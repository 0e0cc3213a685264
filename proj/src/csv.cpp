#include "qrf/csv.hpp"

#include <charconv>
#include <cstdio>
#include <system_error>

#include "qrf/errors.hpp"

namespace qrf {

namespace {
std::filesystem::path tmp_path(const std::filesystem::path& p) {
  return p.string() + ".tmp";
}
}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

CsvReader::CsvReader(const std::filesystem::path& path)
    : in_(path), path_(path.string()) {
  if (!in_) {
    throw ParseError("cannot open " + path_);
  }
}

void CsvReader::fail(const std::string& what) const {
  throw ParseError(path_ + ":" + std::to_string(line_) + ": " + what);
}

bool CsvReader::next_row(std::vector<std::string>& fields) {
  std::string row;
  if (!std::getline(in_, row)) return false;
  ++line_;
  if (!row.empty() && row.back() == '\r') row.pop_back();
  if (row.empty()) {
    // Accept trailing blank lines only.
    std::string rest;
    while (std::getline(in_, rest)) {
      if (!rest.empty() && rest.back() == '\r') rest.pop_back();
      if (!rest.empty()) fail("blank line inside table");
    }
    return false;
  }
  fields.clear();
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = row.find(',', start);
    if (comma == std::string::npos) {
      fields.emplace_back(row.substr(start));
      break;
    }
    fields.emplace_back(row.substr(start, comma - start));
    start = comma + 1;
  }
  return true;
}

double CsvReader::field_double(const std::string& s, const char* column) const {
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    fail(std::string("bad numeric value '") + s + "' in column " + column);
  }
  return value;
}

long long CsvReader::field_int(const std::string& s, const char* column) const {
  long long value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    fail(std::string("bad integer value '") + s + "' in column " + column);
  }
  return value;
}

void CsvReader::expect_header(const std::vector<std::string>& expected) {
  std::vector<std::string> fields;
  if (!next_row(fields)) fail("missing header row");
  if (fields != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) want += ',';
      want += expected[i];
    }
    fail("unexpected header; expected '" + want + "'");
  }
}

AtomicFile::AtomicFile(std::filesystem::path path) : path_(std::move(path)) {}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    std::error_code ec;
    std::filesystem::remove(tmp_path(path_), ec);
  }
}

void AtomicFile::write_row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) buffer_ += ',';
    buffer_ += fields[i];
  }
  buffer_ += '\n';
}

void AtomicFile::commit() {
  const std::filesystem::path tmp = tmp_path(path_);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path_);
  committed_ = true;
}

}  // namespace qrf
