#include "chiplink/driver.hpp"

int main(int argc, char** argv) { return chiplink::driver::cli(argc, argv); }
