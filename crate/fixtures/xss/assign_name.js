const greet = function (req, res) {
  var name = req.name;
  name = escape(name);
  audit(name);
  var page = "Hello " + name;
  res.send(page);
};
