BufferedReader br = new BufferedReader(new FileReader(path));
String line;
List<String> lines = new ArrayList<>();
while ((line = br.readLine()) != null) {
    lines.add(line.trim());
}
br.close();
// parse simple name to fully qualified name
// "BufferedReader()" → "java.io.BufferedReader()"
// "List<>" → "java.util.List<>"
// "add()" → "java.util.List.add()"
// "lines" → "java.util.List"
// "ArrayList<>" → "java.util.ArrayList<>"
// "close()" → "java.io.BufferedReader.close()"
// "trim()" → "java.lang.String.trim()"
// "FileReader()" → "java.io.FileReader()"
// "readLine()" →