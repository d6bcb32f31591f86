#include "basket_dae/cli.hpp"

int main(int argc, char** argv) { return basket_dae::cli::run(argc, argv); }
