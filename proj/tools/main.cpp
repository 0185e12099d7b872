#include "cli_app.hpp"

int main(int argc, char** argv) { return hsicd::run_cli(std::vector<std::string>(argv, argv + argc)); }
