#ifndef QUAYSIM_SCENARIO_IO_H_
#define QUAYSIM_SCENARIO_IO_H_

#include <stdexcept>
#include <string>

#include "quaysim/engine.h"

namespace quaysim {

// A scenario document that is malformed or fails validation. The message
// names the line and column for syntax errors and the JSON path otherwise.
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
// Inverse of parse_scenario; parse_scenario(dump_scenario(s)) == s.
std::string dump_scenario(const Scenario& s);

}  // namespace quaysim

#endif  // QUAYSIM_SCENARIO_IO_H_
