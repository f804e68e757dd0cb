#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lineloss/network.hpp"

namespace lineloss {

/// Malformed case text. `line()` is 1-based, 0 when not attributable.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ParseOptions {
  bool require_connected = true;
};

/// Parses the MATPOWER subset (baseMVA, bus, gen, branch, gencost) and
/// returns a validated per-unit network. Syntax problems raise ParseError;
/// semantic problems raise NetworkError.
PowerNetwork parse_case(std::string_view text, std::string name = "case",
                        const ParseOptions& options = {});
PowerNetwork load_case(const std::filesystem::path& path,
                       const ParseOptions& options = {});

/// MATPOWER text for `net`, converted back to MW/MVAr/degrees.
std::string write_case(const PowerNetwork& net);

/// Canonical per-unit JSON dump.
nlohmann::json network_to_json(const PowerNetwork& net);

}  // namespace lineloss
