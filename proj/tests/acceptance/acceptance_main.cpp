// Placeholder; the acceptance suite is filled in alongside the modules.
int main() { return 0; }
