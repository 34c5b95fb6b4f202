// Command-line entry point. Subcommands are wired up in cli.hpp; this file
// only translates exceptions into exit codes.

#include <cstdio>
#include <exception>

#include "semnav/cli.hpp"

int main(int argc, char** argv) {
  try {
    return semnav::cli_main(argc, argv);
  } catch (const semnav::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const semnav::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 4;
  } catch (const semnav::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 4;
  } catch (const semnav::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 6;
  }
}
