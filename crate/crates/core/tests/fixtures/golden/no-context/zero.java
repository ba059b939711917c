// parse simple name to fully qualified name
// the fully qualified name of "readLine()" is