BufferedReader br = new BufferedReader(new FileReader(path));
String line;
List<String> lines = new ArrayList<>();
while ((line = br.readLine()) != null) {
    lines.add(line.trim());
}
br.close();
// parse simple name to fully qualified name
// "List<>" → "java.util.List<>"
// "close()" → "java.io.BufferedReader.close()"
// "add()" → "java.util.List.add()"
// "BufferedReader" → "java.io.BufferedReader"
// "FileReader()" → "java.io.FileReader()"
// "String" → "java.lang.String"
// "ArrayList<>" → "java.util.ArrayList<>"
// "BufferedReader()" → "java.io.BufferedReader()"
// "line" → "java.lang.String"
// "trim()" → "java.lang.String.trim()"
// "br" → "java.io.BufferedReader"
// "lines" → "java.util.List"
// "readLine()" →