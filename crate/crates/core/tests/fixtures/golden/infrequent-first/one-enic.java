BufferedReader br = new BufferedReader(new FileReader(path));
String line;
List<String> lines = new ArrayList<>();
while ((line = br.readLine()) != null) {
    lines.add(line.trim());
}
br.close();
// parse simple name to fully qualified name
// the fully qualified name of "Object" is "java.lang.Object"
// the fully qualified name of "readLine()" is