BufferedReader br = new BufferedReader(new FileReader(path));
String line;
List<String> lines = new ArrayList<>();
while ((line = br.readLine()) != null) {
    lines.add(line.trim());
}
br.close();
// type inference
// the fully qualified name of "BufferedReader()" is "java.io.BufferedReader()"
// the fully qualified name of "close()" is "java.io.BufferedReader.close()"
// the fully qualified name of "FileReader()" is "java.io.FileReader()"
// the fully qualified name of "trim()" is "java.lang.String.trim()"
// the fully qualified name of "ArrayList<>" is "java.util.ArrayList<>"
// the fully qualified name of "lines" is "java.util.List"
// the fully qualified name of "add()" is "java.util.List.add()"
// the fully qualified name of "List<>" is "java.util.List<>"
// the fully qualified name of "BufferedReader" is "java.io.BufferedReader"
// the fully qualified name of "br" is "java.io.BufferedReader"
// the fully qualified name of "String" is "java.lang.String"
// the fully qualified name of "line" is "java.lang.String"
// the fully qualified name of "readLine()" is