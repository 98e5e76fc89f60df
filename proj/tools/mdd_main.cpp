// Binary entry point; all behavior lives in the library's cli_run.
#include "mdd/harness.hpp"

int main(int argc, char** argv) { return mdd::cli_run(argc, argv); }
