#pragma once

#include "plumeseek/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace plumeseek {

/// Exit status of an active mission that ran out of iterations.
inline constexpr int kExitUnconverged = 2;

struct CommandOptions
{
    Config config;
    std::filesystem::path out = "out";
    std::string algo;              // empty: command default
    std::optional<Vec2> truth;
    std::filesystem::path log;     // localize input
    int threads = 1;
    std::ostream* msg = nullptr;   // progress and summaries; null for silence
};

/// Parses "x,y".
Vec2 parse_point(const std::string& text);

/// Worker count: hardware threads capped by PLUMESEEK_THREADS when set.
int default_threads();

int cmd_simulate(const CommandOptions& opt);
int cmd_localize(const CommandOptions& opt);
int cmd_active(const CommandOptions& opt);
int cmd_bench(const CommandOptions& opt);

}  // namespace plumeseek
