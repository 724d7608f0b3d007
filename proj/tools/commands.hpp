#pragma once

namespace pcftool {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitFallback = 4;

int run(int argc, char** argv);

}  // namespace pcftool
