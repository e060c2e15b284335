#include <cstdio>
int main() { std::puts("fas-mobo"); return 0; }
