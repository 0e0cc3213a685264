#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace qrf {

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double x);

class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  // Splits the next line on ','. Returns false at end of file. Blank lines at
  // the end of the file are skipped; interior blank lines are an error.
  bool next_row(std::vector<std::string>& fields);

  std::size_t line() const { return line_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const;

  double field_double(const std::string& s, const char* column) const;
  long long field_int(const std::string& s, const char* column) const;

  // Reads the header row and verifies it matches `expected` exactly.
  void expect_header(const std::vector<std::string>& expected);

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t line_ = 0;
};

// Buffers everything, then writes to a temporary file and renames it into
// place on commit. A failed run never leaves a partial output behind.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path);
  ~AtomicFile();

  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  void write(std::string_view s) { buffer_.append(s); }
  void write_row(const std::vector<std::string>& fields);
  void commit();

 private:
  std::filesystem::path path_;
  std::string buffer_;
  bool committed_ = false;
};

}  // namespace qrf
