#pragma once

#include <string>
#include <vector>

#include "pwcrt/can_model.hpp"

namespace pwcrt {

std::vector<std::string> builtin_set_names();

// Named built-in message sets:
//   "sae"      - the 17-frame SAE automotive benchmark on a 125 kbit/s bus
//   "example3" - a three-frame set with explicit transmission-time pmfs,
//                small enough to check every analysis stage by hand
MessageSet builtin_message_set(const std::string& name);

}  // namespace pwcrt
