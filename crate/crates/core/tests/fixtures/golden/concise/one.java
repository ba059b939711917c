BufferedReader br = new BufferedReader(new FileReader(path));
String line;
List<String> lines = new ArrayList<>();
while ((line = br.readLine()) != null) {
    lines.add(line.trim());
}
br.close();
// type inference
// the fully qualified name of "br" is "java.io.BufferedReader"
// the fully qualified name of "readLine()" is