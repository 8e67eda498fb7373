#include "prolink/cli.hpp"

int main(int argc, char** argv) { return prolink::cli::run(argc, argv); }
