#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"adaptqp: ADMM QP solver with pluggable step-size policies"};
  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);
  return 0;
}
