#include "poprec/cli.hpp"

int main(int argc, char** argv) { return poprec::run(argc, argv); }
