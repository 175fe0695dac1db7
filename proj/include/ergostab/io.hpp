#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ergostab/dataset.hpp"
#include "ergostab/markov.hpp"
#include "ergostab/stability.hpp"

namespace ergostab {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips to the same double; "nan", "inf", "-inf"
/// for non-finite values.
std::string format_double(double value);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_quote(std::string_view field);

/// In-memory CSV table with a mandatory header; rendered with '\n' line ends
/// and a trailing newline.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  class Row {
   public:
    Row& add(double value);
    Row& add(std::int64_t value);
    Row& add(std::uint64_t value);
    Row& add(int value) { return add(static_cast<std::int64_t>(value)); }
    Row& add(bool value);
    Row& add(std::string_view value);
    Row& add(const char* value) { return add(std::string_view(value)); }
    Row& add(const std::optional<std::size_t>& value);
    Row& empty();

   private:
    friend class CsvTable;
    explicit Row(std::vector<std::string>& fields) : fields_(fields) {}
    std::vector<std::string>& fields_;
  };

  /// Starts a new row; the caller must add exactly header().size() fields.
  Row row();

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  /// Throws IoError if some row has the wrong field count.
  std::string render() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes `content` atomically enough for our purposes (truncate + write).
/// Throws IoError naming the path.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

/// JSON text with two-space indent and a trailing newline.
std::string render_json(const Json& value);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

Json to_json(const Sample& sample);
Json to_json(const Teacher& teacher);
/// Metadata block plus row-major sample array; exact round trip through
/// dataset_from_json.
Json to_json(const SyntheticDataset& dataset);
SyntheticDataset dataset_from_json(const Json& doc);

Json to_json(const StabilityReport& report);
CsvTable stability_csv(const StabilityReport& report);

Json to_json(const TransitionMatrix& matrix);
Json to_json(const SpectralReport& spectrum);
CsvTable spectrum_csv(const SpectralReport& spectrum);

Json to_json(const BoundReport& bound);
Json to_json(const WeylReport& weyl);

}  // namespace ergostab
