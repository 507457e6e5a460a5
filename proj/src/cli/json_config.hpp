#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace unrollrisk::cli {

// CLI11 config reader/writer for JSON files. Nested objects address
// subcommands: {"seed": 3, "sweep": {"k": [1, 2]}} sets --seed and sweep's --k.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace unrollrisk::cli
